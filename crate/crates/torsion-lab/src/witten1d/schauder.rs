//! Schauder (Schatten) norms from singular values.

use crate::linalg::CMat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchauderIndex {
    Finite(f64),
    Infinity,
}

/// `(Tr[(B* B)^{n/2}])^{1/n}`, or the operator norm for `n = infinity`.
pub fn schauder_norm(b: &CMat, n: SchauderIndex) -> f64 {
    if b.nrows() == 0 || b.ncols() == 0 {
        return 0.0;
    }
    let sv = b.clone().singular_values();
    match n {
        SchauderIndex::Infinity => sv.iter().cloned().fold(0.0, f64::max),
        SchauderIndex::Finite(p) => {
            assert!(p >= 1.0, "Schauder index must be >= 1");
            let top = sv.iter().cloned().fold(0.0, f64::max);
            if top == 0.0 {
                return 0.0;
            }
            // Scale by the largest singular value to avoid overflow for large p.
            top * sv.iter().map(|s| (s / top).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c};

    #[test]
    fn identity_two_norm() {
        let i = linalg::eye(5);
        assert!((schauder_norm(&i, SchauderIndex::Finite(2.0)) - 5f64.sqrt()).abs() < 1e-14);
        assert!((schauder_norm(&i, SchauderIndex::Infinity) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_norms_coincide() {
        let u = CMat::from_fn(4, 1, |i, _| c(i as f64 + 1.0, 0.5));
        let v = CMat::from_fn(1, 3, |_, j| c(1.0, j as f64));
        let b = u * v;
        let inf = schauder_norm(&b, SchauderIndex::Infinity);
        for n in [1.0, 2.0, 3.5, 10.0] {
            assert!((schauder_norm(&b, SchauderIndex::Finite(n)) - inf).abs() < 1e-10 * inf);
        }
    }
}
