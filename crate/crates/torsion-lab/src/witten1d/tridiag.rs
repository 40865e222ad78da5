//! Hermitian tridiagonal matrices with an optional periodic corner, Sturm
//! counts, bisection and inverse iteration.

use crate::linalg::{c, CMat, C64};
use crate::par;
use rand::{Rng, SeedableRng};

/// Hermitian matrix with real diagonal `diag`, real super-diagonal `off`
/// (`M[i][i+1]`) and a complex corner `M[0][n-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub corner: C64,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>, corner: C64) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        if corner != c(0.0, 0.0) {
            assert!(diag.len() >= 3, "periodic matrices need at least 3 rows");
        }
        SymTridiag { diag, off, corner }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.len();
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(self.diag[i], 0.0);
        }
        for i in 0..n.saturating_sub(1) {
            m[(i, i + 1)] += c(self.off[i], 0.0);
            m[(i + 1, i)] += c(self.off[i], 0.0);
        }
        if n >= 3 {
            m[(0, n - 1)] += self.corner;
            m[(n - 1, 0)] += self.corner.conj();
        }
        m
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            if n >= 3 && (i == 0 || i == n - 1) {
                r += self.corner.norm();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mut y: Vec<C64> = (0..n).map(|i| x[i] * self.diag[i]).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += x[i + 1] * self.off[i];
            y[i + 1] += x[i] * self.off[i];
        }
        if n >= 3 {
            y[0] += self.corner * x[n - 1];
            y[n - 1] += self.corner.conj() * x[0];
        }
        y
    }

    /// Bordered LDL* factorisation of `M - sigma`: returns pivots and the
    /// couplings of each eliminated row to the last row.
    fn factor(&self, sigma: f64) -> (Vec<f64>, Vec<C64>, f64) {
        let n = self.len();
        let tiny = f64::EPSILON * self.scale() * 1e-3;
        let guard = |d: f64| if d == 0.0 { tiny } else { d };
        if n == 1 {
            return (vec![], vec![], guard(self.diag[0] - sigma));
        }
        let last = n - 1;
        let mut d = Vec::with_capacity(last);
        let mut e = Vec::with_capacity(last);
        let mut dl = self.diag[last] - sigma;
        for i in 0..last {
            let direct = if i + 1 == last { c(self.off[i], 0.0) } else { c(0.0, 0.0) };
            let corner = if i == 0 && n >= 3 { self.corner } else { c(0.0, 0.0) };
            let (di, ei) = if i == 0 {
                (self.diag[0] - sigma, direct + corner)
            } else {
                let dp = d[i - 1];
                let ep: C64 = e[i - 1];
                (self.diag[i] - sigma - self.off[i - 1] * self.off[i - 1] / dp, direct - ep * (self.off[i - 1] / dp))
            };
            let di = guard(di);
            dl -= ei.norm_sqr() / di;
            d.push(di);
            e.push(ei);
        }
        (d, e, guard(dl))
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        if self.is_empty() {
            return 0;
        }
        let (d, _, dl) = self.factor(sigma);
        d.iter().filter(|&&x| x < 0.0).count() + usize::from(dl < 0.0)
    }

    /// Solves `(M - sigma) x = rhs`.
    pub fn solve_shifted(&self, sigma: f64, rhs: &[C64]) -> Vec<C64> {
        let n = self.len();
        if n == 1 {
            return vec![rhs[0] / (self.diag[0] - sigma)];
        }
        let last = n - 1;
        let (d, e, dl) = self.factor(sigma);
        let mut y = rhs.to_vec();
        let mut yl = y[last];
        for i in 0..last {
            if i > 0 {
                let t = y[i - 1] * (self.off[i - 1] / d[i - 1]);
                y[i] -= t;
            }
            yl -= e[i].conj() * y[i] / d[i];
        }
        let mut x = vec![c(0.0, 0.0); n];
        x[last] = yl / dl;
        for i in (0..last).rev() {
            let mut v = y[i] - e[i] * x[last];
            if i + 1 < last {
                v -= x[i + 1] * self.off[i];
            }
            x[i] = v / d[i];
        }
        x
    }
}

/// Inertia of `K - sigma M` for a weighted graph Laplacian `K` on a path or
/// cycle, computed by Kron reduction in row-sum form so that no cancellation
/// occurs between the weights and the (possibly tiny) shifted row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLaplacian {
    /// `weights[i]` couples node `i` to node `i + 1` (and `n - 1` to `0` if periodic).
    pub weights: Vec<f64>,
    pub masses: Vec<f64>,
    /// Extra diagonal (Dirichlet grounding), part of the row sums.
    pub ground: Vec<f64>,
    pub periodic: bool,
}

impl WeightedLaplacian {
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.masses.len();
        let mut s: Vec<f64> = (0..n).map(|i| self.ground[i] - sigma * self.masses[i]).collect();
        let guard = |d: f64| if d == 0.0 { f64::MIN_POSITIVE } else { d };
        let mut count = 0;
        if !self.periodic || n < 3 {
            for k in 0..n {
                let w = if k + 1 < n { self.weights[k] } else { 0.0 };
                let d = guard(s[k] + w);
                if d < 0.0 {
                    count += 1;
                }
                if k + 1 < n {
                    s[k + 1] += w * s[k] / d;
                }
            }
            return count;
        }
        let last = n - 1;
        let mut q = self.weights[last];
        let mut sl = s[last];
        for k in 0..last {
            let w = self.weights[k];
            let d = guard(s[k] + w + q);
            if d < 0.0 {
                count += 1;
            }
            if k + 1 == last {
                sl += (w + q) * s[k] / d;
            } else {
                s[k + 1] += w * s[k] / d;
                sl += q * s[k] / d;
                q = w * q / d;
            }
        }
        if sl < 0.0 {
            count += 1;
        }
        count
    }
}

/// Lowest `k` eigenvalues from a monotone eigenvalue counter, by bisection
/// (geometric while the bracket spans orders of magnitude). Eigenvalues below
/// `1e-290` are reported as zero.
pub fn bisect_lowest(count: impl Fn(f64) -> usize + Sync, k: usize, hi: f64, rtol: f64) -> Vec<f64> {
    let floor = 1e-290;
    par::map_range(k, |i| {
        if count(floor) > i {
            return 0.0;
        }
        let mut a = floor;
        let mut b = hi;
        while count(b) <= i {
            b *= 2.0;
        }
        for _ in 0..4000 {
            if b - a <= rtol * b {
                break;
            }
            let mid = if b / a > 4.0 { (a * b).sqrt() } else { 0.5 * (a + b) };
            if mid <= a || mid >= b {
                break;
            }
            if count(mid) > i {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    })
}

/// Unit vector (Euclidean) for eigenvalue `lambda` by inverse iteration,
/// orthogonalised against `previous`.
pub fn inverse_iteration(m: &SymTridiag, lambda: f64, previous: &[Vec<C64>], seed: u64) -> Vec<C64> {
    let n = m.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let orth = |x: &mut Vec<C64>| {
        for p in previous {
            let dot: C64 = p.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi -= dot * pi;
            }
        }
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for xi in x.iter_mut() {
            *xi /= norm;
        }
    };
    orth(&mut x);
    for _ in 0..4 {
        x = m.solve_shifted(lambda, &x);
        orth(&mut x);
    }
    x
}

pub fn residual(m: &SymTridiag, lambda: f64, x: &[C64]) -> f64 {
    let y = m.matvec(x);
    y.iter().zip(x).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn sample(periodic: bool) -> SymTridiag {
        let n = 9;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.3 * (i as f64).sin()).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| -1.0 + 0.1 * i as f64).collect();
        let corner = if periodic { c(-0.7, 0.4) } else { c(0.0, 0.0) };
        SymTridiag::new(diag, off, corner)
    }

    #[test]
    fn counts_match_dense_spectrum() {
        for periodic in [false, true] {
            let t = sample(periodic);
            let vals = linalg::eigvalsh(&t.to_dense());
            for w in vals.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                let expect = vals.iter().filter(|&&v| v < mid).count();
                assert_eq!(t.count_below(mid), expect);
            }
            let got = bisect_lowest(|s| t.count_below(s), 3, 10.0, 1e-14);
            let shift = vals[0].min(0.0);
            if shift == 0.0 {
                for i in 0..3 {
                    assert!((got[i] - vals[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shifted_solve() {
        let t = sample(true);
        let x: Vec<C64> = (0..t.len()).map(|i| c(i as f64, 1.0)).collect();
        let b: Vec<C64> = t.matvec(&x).iter().zip(&x).map(|(y, x)| y - x * 0.3).collect();
        let back = t.solve_shifted(0.3, &b);
        for (p, q) in back.iter().zip(&x) {
            assert!((p - q).norm() < 1e-10);
        }
    }

    #[test]
    fn weighted_laplacian_inertia() {
        let w = WeightedLaplacian {
            weights: vec![1.0, 2.0, 0.5, 1.5, 3.0],
            masses: vec![1.0, 0.5, 2.0, 1.0, 1.0],
            ground: vec![0.0; 5],
            periodic: true,
        };
        // Dense generalized problem via M^{-1/2} K M^{-1/2}.
        let n = 5;
        let mut k = CMat::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            let wi = c(w.weights[i], 0.0);
            k[(i, i)] += wi;
            k[(j, j)] += wi;
            k[(i, j)] -= wi;
            k[(j, i)] -= wi;
        }
        let s = CMat::from_fn(n, n, |i, j| k[(i, j)] / (w.masses[i] * w.masses[j]).sqrt());
        let vals = linalg::eigvalsh(&s);
        for x in [1e-3, 0.7, 2.0, 5.0, 20.0] {
            assert_eq!(w.count_below(x), vals.iter().filter(|&&v| v < x).count(), "sigma {x}");
        }
        assert_eq!(w.count_below(1e-300), 1);
    }
}
