use std::fmt;

use super::DenseTensor;
use crate::scalar::Scalar;

impl<T: Scalar> DenseTensor<T> {
    /// Human-readable listing with `digits` significant digits.
    pub fn show(&self, digits: usize) -> String {
        let mut out = format!("tensor {:?}\n", self.shape());
        let p = digits.max(1) - 1;
        let fmt_real = |x: f64| format!("{x:.p$e}");
        let shape = self.shape();
        if self.rank() == 2 {
            for i in 0..shape[0] {
                let row: Vec<String> = (0..shape[1])
                    .map(|j| format_elem(self.data()[i + j * shape[0]], &fmt_real))
                    .collect();
                out.push_str(&row.join("  "));
                out.push('\n');
            }
        } else {
            let items: Vec<String> = self
                .data()
                .iter()
                .map(|&x| format_elem(x, &fmt_real))
                .collect();
            out.push_str(&items.join("  "));
            out.push('\n');
        }
        out
    }
}

fn format_elem<T: Scalar>(x: T, fmt_real: &impl Fn(f64) -> String) -> String {
    if T::IS_COMPLEX {
        let im = x.im_f64();
        let sign = if im < 0.0 { '-' } else { '+' };
        format!("{}{sign}{}i", fmt_real(x.re_f64()), fmt_real(im.abs()))
    } else {
        fmt_real(x.re_f64())
    }
}

impl<T: Scalar> fmt::Display for DenseTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.show(4))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_digit_default() {
        let t = DenseTensor::diag(&[1.0, 0.123456]);
        let s = t.to_string();
        assert!(s.contains("1.235e-1"), "{s}");
        assert!(s.starts_with("tensor [2, 2]"));
    }
}
