//! Column-major index arithmetic with 1-based positions.
//!
//! Linear index `n` and position `p` over a shape `s` are related by
//! `n = 1 + Σ_k (p_k − 1)·stride_k` with `stride_1 = 1` and
//! `stride_{k+1} = stride_k · s_k` (first index fastest).

use crate::error::{Error, Result};

/// Column-major strides of `shape` (0-based offsets).
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(shape.len());
    let mut acc = 1usize;
    for &d in shape {
        out.push(acc);
        acc *= d;
    }
    out
}

/// Position (1-based) of the `linear`-th (1-based) element.
pub fn multi_index_of(linear: usize, shape: &[usize]) -> Result<Vec<usize>> {
    let mut pos = vec![0; shape.len()];
    multi_index_into(linear, shape, &mut pos)?;
    Ok(pos)
}

/// In-place form of [`multi_index_of`] writing into a pre-allocated vector.
pub fn multi_index_into(linear: usize, shape: &[usize], pos: &mut [usize]) -> Result<()> {
    let total: usize = shape.iter().product();
    if linear == 0 || linear > total {
        return Err(Error::Bounds(format!(
            "linear index {linear} outside 1..={total}"
        )));
    }
    if pos.len() != shape.len() {
        return Err(Error::Shape(format!(
            "position buffer has length {}, shape has rank {}",
            pos.len(),
            shape.len()
        )));
    }
    let mut rem = linear - 1;
    for (p, &d) in pos.iter_mut().zip(shape) {
        *p = rem % d + 1;
        rem /= d;
    }
    Ok(())
}

/// Linear index (1-based) of a 1-based position.
pub fn linear_index_of(pos: &[usize], shape: &[usize]) -> Result<usize> {
    if pos.len() != shape.len() {
        return Err(Error::Shape(format!(
            "position has {} components, shape has rank {}",
            pos.len(),
            shape.len()
        )));
    }
    let mut linear = 0usize;
    let mut stride = 1usize;
    for (k, (&p, &d)) in pos.iter().zip(shape).enumerate() {
        if p == 0 || p > d {
            return Err(Error::Bounds(format!(
                "component {} = {p} outside 1..={d}",
                k + 1
            )));
        }
        linear += (p - 1) * stride;
        stride *= d;
    }
    Ok(linear + 1)
}

/// Pre-first position for 1-based odometer sweeps: `(0, 1, 1, …)`.
pub fn make_position(rank: usize) -> Vec<usize> {
    let mut pos = vec![1; rank];
    if let Some(first) = pos.first_mut() {
        *first = 0;
    }
    pos
}

/// Advances a 1-based position by one step in column-major order.
///
/// Starting from [`make_position`], `product(shape)` calls visit every
/// position exactly once. Stepping past the last position wraps to the first.
pub fn next_position(pos: &mut [usize], shape: &[usize]) {
    for (p, &d) in pos.iter_mut().zip(shape) {
        if *p < d {
            *p += 1;
            return;
        }
        *p = 1;
    }
}

/// Pre-first position for 0-based odometer sweeps: `(-1, 0, 0, …)`.
pub fn make_position_zero_based(rank: usize) -> Vec<isize> {
    let mut pos = vec![0; rank];
    if let Some(first) = pos.first_mut() {
        *first = -1;
    }
    pos
}

/// 0-based counterpart of [`next_position`].
pub fn next_position_zero_based(pos: &mut [isize], shape: &[usize]) {
    for (p, &d) in pos.iter_mut().zip(shape) {
        if *p + 1 < d as isize {
            *p += 1;
            return;
        }
        *p = 0;
    }
}
