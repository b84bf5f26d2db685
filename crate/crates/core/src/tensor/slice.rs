use super::{index, DenseTensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Selection along one axis. All indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexSelector {
    /// A single index; the axis is dropped from the result.
    At(usize),
    /// Inclusive range `lo..=hi`; the axis is kept even when `lo == hi`.
    Range(usize, usize),
    /// The whole axis.
    Full,
    /// Explicit list of indices, kept in the given order.
    List(Vec<usize>),
}

/// Result of [`DenseTensor::get_slice`]: integer-only selections collapse to a
/// plain scalar.
#[derive(Clone, Debug, PartialEq)]
pub enum Sliced<T> {
    Scalar(T),
    Tensor(DenseTensor<T>),
}

impl<T: Scalar> Sliced<T> {
    pub fn into_tensor(self) -> DenseTensor<T> {
        match self {
            Sliced::Scalar(x) => DenseTensor::scalar(x),
            Sliced::Tensor(t) => t,
        }
    }
}

struct Selection {
    /// 0-based indices selected on each axis.
    picks: Vec<Vec<usize>>,
    /// Shape of the selected block, dropped axes excluded.
    kept_shape: Vec<usize>,
}

impl Selection {
    fn resolve(shape: &[usize], selectors: &[IndexSelector]) -> Result<Self> {
        if selectors.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} selectors given for a rank-{} tensor",
                selectors.len(),
                shape.len()
            )));
        }
        let mut picks = Vec::with_capacity(shape.len());
        let mut kept_shape = Vec::new();
        for (axis, (sel, &d)) in selectors.iter().zip(shape).enumerate() {
            let check = |i: usize| {
                if i == 0 || i > d {
                    Err(Error::Bounds(format!(
                        "index {i} outside 1..={d} on axis {}",
                        axis + 1
                    )))
                } else {
                    Ok(i - 1)
                }
            };
            let list: Vec<usize> = match sel {
                IndexSelector::At(i) => vec![check(*i)?],
                IndexSelector::Range(lo, hi) => {
                    if lo > hi {
                        return Err(Error::Bounds(format!(
                            "empty range {lo}..={hi} on axis {}",
                            axis + 1
                        )));
                    }
                    check(*lo)?;
                    check(*hi)?;
                    (lo - 1..*hi).collect()
                }
                IndexSelector::Full => (0..d).collect(),
                IndexSelector::List(v) => {
                    if v.is_empty() {
                        return Err(Error::Bounds(format!("empty index list on axis {}", axis + 1)));
                    }
                    v.iter().map(|&i| check(i)).collect::<Result<_>>()?
                }
            };
            if !matches!(sel, IndexSelector::At(_)) {
                kept_shape.push(list.len());
            }
            picks.push(list);
        }
        Ok(Selection { picks, kept_shape })
    }

    fn all_dropped(&self, selectors: &[IndexSelector]) -> bool {
        selectors.iter().all(|s| matches!(s, IndexSelector::At(_)))
    }

    fn block_len(&self) -> usize {
        self.picks.iter().map(Vec::len).product()
    }

    /// Calls `f(block_offset, source_offset)` for every selected element in
    /// column-major block order.
    fn for_each(&self, shape: &[usize], mut f: impl FnMut(usize, usize)) {
        let strides = index::strides(shape);
        let rank = shape.len();
        let lens: Vec<usize> = self.picks.iter().map(Vec::len).collect();
        let mut counter = vec![0usize; rank];
        for n in 0..self.block_len() {
            let offset: usize = (0..rank)
                .map(|k| self.picks[k][counter[k]] * strides[k])
                .sum();
            f(n, offset);
            for k in 0..rank {
                counter[k] += 1;
                if counter[k] < lens[k] {
                    break;
                }
                counter[k] = 0;
            }
        }
    }
}

impl<T: Scalar> DenseTensor<T> {
    /// Extracts a block. Integer selectors drop their axis; ranges, lists and
    /// full selectors keep it. If every selector is an integer the element is
    /// returned as a scalar.
    pub fn get_slice(&self, selectors: &[IndexSelector]) -> Result<Sliced<T>> {
        let sel = Selection::resolve(self.shape(), selectors)?;
        let mut data = Vec::with_capacity(sel.block_len());
        sel.for_each(self.shape(), |_, src| data.push(self.data()[src]));
        if sel.all_dropped(selectors) {
            return Ok(Sliced::Scalar(data[0]));
        }
        Ok(Sliced::Tensor(DenseTensor::from_vec(sel.kept_shape, data)?))
    }

    /// In-place form of [`DenseTensor::get_slice`]: writes the block into
    /// `dest`, whose element count must equal the block size.
    pub fn get_slice_into(&self, selectors: &[IndexSelector], dest: &mut DenseTensor<T>) -> Result<()> {
        let sel = Selection::resolve(self.shape(), selectors)?;
        if dest.len() != sel.block_len() {
            return Err(Error::Shape(format!(
                "destination holds {} elements, selection has {}",
                dest.len(),
                sel.block_len()
            )));
        }
        let src = self.data();
        let out = dest.data_mut();
        sel.for_each(self.shape(), |n, s| out[n] = src[s]);
        Ok(())
    }

    /// Overwrites the selected block with `source`, whose shape must equal the
    /// kept shape of the selection.
    pub fn set_slice(&mut self, selectors: &[IndexSelector], source: &DenseTensor<T>) -> Result<()> {
        let sel = Selection::resolve(self.shape(), selectors)?;
        if source.shape() != sel.kept_shape.as_slice() {
            return Err(Error::Shape(format!(
                "source shape {:?} does not match selected block {:?}",
                source.shape(),
                sel.kept_shape
            )));
        }
        let shape = self.shape().to_vec();
        let src = source.data();
        let dst = self.data_mut();
        sel.for_each(&shape, |n, d| dst[d] = src[n]);
        Ok(())
    }

    /// Sets every selected element to `value`.
    pub fn fill_slice(&mut self, selectors: &[IndexSelector], value: T) -> Result<()> {
        let sel = Selection::resolve(self.shape(), selectors)?;
        let shape = self.shape().to_vec();
        let dst = self.data_mut();
        sel.for_each(&shape, |_, d| dst[d] = value);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::IndexSelector::*;
    use super::*;

    fn id2() -> DenseTensor<f64> {
        DenseTensor::diag(&[1.0, 1.0])
    }

    #[test]
    fn integer_selection_gives_scalar() {
        assert_eq!(id2().get_slice(&[At(1), At(1)]).unwrap(), Sliced::Scalar(1.0));
    }

    #[test]
    fn range_keeps_axis() {
        let s = id2().get_slice(&[Range(1, 1), Range(1, 2)]).unwrap();
        let want = DenseTensor::from_vec(vec![1, 2], vec![1.0, 0.0]).unwrap();
        assert_eq!(s, Sliced::Tensor(want));
    }

    #[test]
    fn integer_drops_axis() {
        let t = DenseTensor::<f64>::zeros(&[2, 3, 4]);
        match t.get_slice(&[Full, At(2), Full]).unwrap() {
            Sliced::Tensor(s) => assert_eq!(s.shape(), &[2, 4]),
            Sliced::Scalar(_) => panic!("expected a tensor"),
        }
    }

    #[test]
    fn list_selection_reorders() {
        let t = DenseTensor::from_vec(vec![3], vec![10.0, 20.0, 30.0]).unwrap();
        let s = t.get_slice(&[List(vec![3, 1])]).unwrap().into_tensor();
        assert_eq!(s.data(), &[30.0, 10.0]);
    }

    #[test]
    fn bad_selectors() {
        let t = id2();
        assert!(matches!(t.get_slice(&[At(3), At(1)]), Err(Error::Bounds(_))));
        assert!(matches!(t.get_slice(&[At(1)]), Err(Error::Shape(_))));
        assert!(matches!(t.get_slice(&[Range(2, 1), Full]), Err(Error::Bounds(_))));
    }

    #[test]
    fn writes() {
        let mut t = DenseTensor::<f64>::zeros(&[2, 2]);
        t.fill_slice(&[At(1), At(1)], 5.0).unwrap();
        assert_eq!(t.data(), &[5.0, 0.0, 0.0, 0.0]);

        let mut t = DenseTensor::<f64>::zeros(&[2, 2]);
        let col = DenseTensor::from_vec(vec![2], vec![7.0, 8.0]).unwrap();
        t.set_slice(&[Full, At(1)], &col).unwrap();
        // rows [[7,0],[8,0]] in column-major order
        assert_eq!(t.data(), &[7.0, 8.0, 0.0, 0.0]);
        assert_eq!(t.get_slice(&[Full, At(1)]).unwrap(), Sliced::Tensor(col));

        let wrong = DenseTensor::from_vec(vec![3], vec![1.0; 3]).unwrap();
        assert!(t.set_slice(&[Full, At(1)], &wrong).is_err());
    }

    #[test]
    fn slice_into_destination() {
        let t = DenseTensor::from_fn(&[3, 3], |p| (p[0] * 10 + p[1]) as f64);
        let mut dest = DenseTensor::zeros(&[2, 2]);
        t.get_slice_into(&[Range(2, 3), Range(2, 3)], &mut dest).unwrap();
        assert_eq!(dest.data(), &[22.0, 32.0, 23.0, 33.0]);
    }

    #[test]
    fn block_round_trip() {
        let mut t = DenseTensor::<f64>::zeros(&[4, 3, 2]);
        let block = DenseTensor::from_fn(&[2, 2], |p| (p[0] + 3 * p[1]) as f64);
        let sel = [Range(2, 3), At(2), List(vec![2, 1])];
        t.set_slice(&sel, &block).unwrap();
        assert_eq!(t.get_slice(&sel).unwrap().into_tensor(), block);
        assert_eq!(t.sum(), block.sum());
    }
}
