//! Small quadrature helpers.

use nalgebra::DMatrix;

/// Gauss–Legendre nodes and weights on `[a, b]` (Golub–Welsch).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let beta = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k, k - 1)] = beta;
        jac[(k - 1, k)] = beta;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes = pairs.iter().map(|p| mid + half * p.0).collect();
    let weights = pairs.iter().map(|p| half * p.1).collect();
    (nodes, weights)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Trapezoid rule in `ln t` for `int f(t) dt/t` on precomputed log-spaced nodes.
pub fn trapezoid_log(nodes: &[f64], values: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 1..nodes.len() {
        s += 0.5 * (values[i] + values[i - 1]) * (nodes[i] / nodes[i - 1]).ln();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8, 0.0, 2.0);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        assert!((integral - 2f64.powi(16) / 16.0).abs() < 1e-9);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_trapezoid_exponential() {
        let t = log_space(1e-8, 60.0, 400);
        let v: Vec<f64> = t.iter().map(|&t| t * (-t).exp()).collect();
        assert!((trapezoid_log(&t, &v) - 1.0).abs() < 1e-6);
    }
}
