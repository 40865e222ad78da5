//! Finite Z-graded cochain complexes with Hermitian metrics.
//!
//! A complex is stored as its differentials `d_k : E^k -> E^{k+1}` together
//! with one Gram matrix per degree. Everything else (adjoints, Hodge
//! Laplacians, harmonic spaces, scalar torsion) is derived on demand.

use crate::linalg::{self, c, CMat, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative kernel threshold for Hodge Laplacian eigenvalues.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("d_{{{degree}+1}} d_{degree} = 0 violated (defect {defect:.3e})")]
    NotAComplex { degree: usize, defect: f64 },
    #[error("metric in degree {degree} is not Hermitian positive definite (min eigenvalue {min_eig:.3e})")]
    InvalidMetric { degree: usize, min_eig: f64 },
    #[error("kernel of the degree {degree} Laplacian is ambiguous: eigenvalue {eigenvalue:.3e} lies near threshold {threshold:.3e}")]
    IndeterminateKernel { degree: usize, eigenvalue: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, ComplexError>;

/// h(a) = a exp(a^2).
pub fn h_scalar(a: C64) -> C64 {
    a * (a * a).exp()
}

/// h'(a) = (1 + 2a^2) exp(a^2).
pub fn h_prime(a: C64) -> C64 {
    (c(1.0, 0.0) + a * a * 2.0) * (a * a).exp()
}

/// h'(X) restricted to a degree where X^2 = -t Delta / 4, as a function of
/// the eigenvalue `x = t * lambda`.
pub fn h_prime_heat(x: f64) -> f64 {
    (1.0 - 0.5 * x) * (-0.25 * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerData {
    pub chi: i64,
    pub chi_prime: i64,
}

impl EulerData {
    pub fn from_ranks(ranks: &[usize]) -> Self {
        let mut chi = 0i64;
        let mut chi_prime = 0i64;
        for (k, &r) in ranks.iter().enumerate() {
            let s = if k % 2 == 0 { 1 } else { -1 };
            chi += s * r as i64;
            chi_prime += s * (k as i64) * r as i64;
        }
        EulerData { chi, chi_prime }
    }
}

/// Spectral data of one Hodge Laplacian, in the metric-symmetrised frame.
#[derive(Debug, Clone)]
pub struct DegreeSpectrum {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Number of leading eigenvalues counted as kernel.
    pub kernel_dim: usize,
    /// Eigenvectors of `G^{1/2} Delta G^{-1/2}` (columns).
    pub vectors: CMat,
    /// `G^{-1/2}`, mapping symmetrised eigenvectors to G-orthonormal ones.
    pub g_inv_sqrt: CMat,
}

impl DegreeSpectrum {
    pub fn nonzero(&self) -> &[f64] {
        &self.eigenvalues[self.kernel_dim..]
    }
}

#[derive(Debug, Clone)]
pub struct GradedComplex {
    ranks: Vec<usize>,
    differentials: Vec<CMat>,
    metrics: Vec<CMat>,
}

impl GradedComplex {
    /// Builds a complex, checking shapes, `d^2 = 0` and positivity of the metrics.
    pub fn new(ranks: Vec<usize>, differentials: Vec<CMat>, metrics: Vec<CMat>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(ComplexError::Shape("at least one degree is required".into()));
        }
        if differentials.len() + 1 != ranks.len() {
            return Err(ComplexError::Shape(format!(
                "{} degrees need {} differentials, got {}",
                ranks.len(),
                ranks.len() - 1,
                differentials.len()
            )));
        }
        if metrics.len() != ranks.len() {
            return Err(ComplexError::Shape(format!(
                "{} degrees need {} metrics, got {}",
                ranks.len(),
                ranks.len(),
                metrics.len()
            )));
        }
        for (k, d) in differentials.iter().enumerate() {
            if d.nrows() != ranks[k + 1] || d.ncols() != ranks[k] {
                return Err(ComplexError::Shape(format!(
                    "d_{k} has shape {}x{}, expected {}x{}",
                    d.nrows(),
                    d.ncols(),
                    ranks[k + 1],
                    ranks[k]
                )));
            }
        }
        for (k, g) in metrics.iter().enumerate() {
            if g.nrows() != ranks[k] || g.ncols() != ranks[k] {
                return Err(ComplexError::Shape(format!("metric {k} has wrong size")));
            }
        }
        let cx = GradedComplex { ranks, differentials, metrics };
        cx.check_square_zero()?;
        cx.check_metrics()?;
        Ok(cx)
    }

    /// Complex with identity Gram matrices.
    pub fn standard(ranks: Vec<usize>, differentials: Vec<CMat>) -> Result<Self> {
        let metrics = ranks.iter().map(|&r| linalg::eye(r)).collect();
        Self::new(ranks, differentials, metrics)
    }

    fn check_square_zero(&self) -> Result<()> {
        for k in 0..self.differentials.len().saturating_sub(1) {
            let a = &self.differentials[k];
            let b = &self.differentials[k + 1];
            let prod = b * a;
            let scale = 1.0f64.max(linalg::frob(a) * linalg::frob(b));
            let defect = prod.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if defect > 1e-9 * scale {
                return Err(ComplexError::NotAComplex { degree: k, defect });
            }
        }
        Ok(())
    }

    fn check_metrics(&self) -> Result<()> {
        for (k, g) in self.metrics.iter().enumerate() {
            if g.nrows() == 0 {
                continue;
            }
            if linalg::hermitian_defect(g) > 1e-10 {
                return Err(ComplexError::InvalidMetric { degree: k, min_eig: f64::NAN });
            }
            let m = linalg::min_eigenvalue(g);
            if !(m > 0.0) {
                return Err(ComplexError::InvalidMetric { degree: k, min_eig: m });
            }
        }
        Ok(())
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Highest degree `n`.
    pub fn top_degree(&self) -> usize {
        self.ranks.len() - 1
    }

    pub fn differential(&self, k: usize) -> &CMat {
        &self.differentials[k]
    }

    pub fn differentials(&self) -> &[CMat] {
        &self.differentials
    }

    pub fn metric(&self, k: usize) -> &CMat {
        &self.metrics[k]
    }

    pub fn metrics(&self) -> &[CMat] {
        &self.metrics
    }

    /// Same differentials, new metrics.
    pub fn with_metrics(&self, metrics: Vec<CMat>) -> Result<Self> {
        Self::new(self.ranks.clone(), self.differentials.clone(), metrics)
    }

    /// Multiplies every Gram matrix by `s > 0`.
    pub fn scaled_metrics(&self, s: f64) -> Self {
        GradedComplex {
            ranks: self.ranks.clone(),
            differentials: self.differentials.clone(),
            metrics: self.metrics.iter().map(|g| g * c(s, 0.0)).collect(),
        }
    }

    /// Metric-adjoints `d*_k = G_k^{-1} d_k^dagger G_{k+1}`.
    pub fn adjoints(&self) -> Result<Vec<CMat>> {
        let mut out = Vec::with_capacity(self.differentials.len());
        for (k, d) in self.differentials.iter().enumerate() {
            let gi = linalg::inverse(&self.metrics[k])
                .ok_or(ComplexError::InvalidMetric { degree: k, min_eig: 0.0 })?;
            out.push(gi * d.adjoint() * &self.metrics[k + 1]);
        }
        Ok(out)
    }

    /// Hodge Laplacian in degree `k`.
    pub fn laplacian(&self, k: usize) -> Result<CMat> {
        let adj = self.adjoints()?;
        let r = self.ranks[k];
        let mut lap = CMat::zeros(r, r);
        if k < self.differentials.len() {
            lap += &adj[k] * &self.differentials[k];
        }
        if k > 0 {
            lap += &self.differentials[k - 1] * &adj[k - 1];
        }
        Ok(lap)
    }

    /// Hermitian form `G^{1/2} Delta_k G^{-1/2}`, assembled without inverting G
    /// more than once.
    pub fn symmetric_laplacian(&self, k: usize) -> CMat {
        let r = self.ranks[k];
        let g = &self.metrics[k];
        let gs = linalg::hpd_sqrt(g);
        let gis = linalg::hpd_inv_sqrt(g);
        let mut s = CMat::zeros(r, r);
        if k < self.differentials.len() {
            let d = &self.differentials[k];
            s += &gis * d.adjoint() * &self.metrics[k + 1] * d * &gis;
        }
        if k > 0 {
            let d = &self.differentials[k - 1];
            let gprev_inv = linalg::inverse(&self.metrics[k - 1]).expect("validated metric");
            s += &gs * d * gprev_inv * d.adjoint() * &gs;
        }
        linalg::hermitian_part(&s)
    }

    /// `f(Delta_k)` in the original frame, via the symmetrised form.
    pub fn laplacian_function(&self, k: usize, f: impl Fn(f64) -> f64) -> CMat {
        let g = &self.metrics[k];
        let s = self.symmetric_laplacian(k);
        linalg::hpd_inv_sqrt(g) * linalg::herm_fn(&s, |x| f(x.max(0.0))) * linalg::hpd_sqrt(g)
    }

    /// Spectrum of `Delta_k` with kernel classification.
    pub fn degree_spectrum(&self, k: usize) -> Result<DegreeSpectrum> {
        let s = self.symmetric_laplacian(k);
        let (mut vals, vectors) = linalg::eigh(&s);
        for v in vals.iter_mut() {
            if *v < 0.0 {
                *v = v.abs();
            }
        }
        let kernel_dim = classify_kernel(k, &vals)?;
        Ok(DegreeSpectrum {
            eigenvalues: vals,
            kernel_dim,
            vectors,
            g_inv_sqrt: linalg::hpd_inv_sqrt(&self.metrics[k]),
        })
    }

    pub fn spectra(&self) -> Result<Vec<DegreeSpectrum>> {
        (0..self.ranks.len()).map(|k| self.degree_spectrum(k)).collect()
    }

    /// Eigenvalues of `Delta_k`, ascending.
    pub fn laplacian_spectrum(&self, k: usize) -> Vec<f64> {
        linalg::eigvalsh(&self.symmetric_laplacian(k))
    }

    /// Dimensions of the harmonic spaces.
    pub fn betti(&self) -> Result<Vec<usize>> {
        Ok(self.spectra()?.iter().map(|s| s.kernel_dim).collect())
    }

    pub fn euler(&self) -> EulerData {
        EulerData::from_ranks(&self.ranks)
    }

    /// Euler data of the cohomology.
    pub fn cohomology_euler(&self) -> Result<EulerData> {
        Ok(EulerData::from_ranks(&self.betti()?))
    }

    /// G-orthonormal basis (columns) of the harmonic space in degree `k`.
    pub fn harmonic_basis(&self, k: usize) -> Result<CMat> {
        let sp = self.degree_spectrum(k)?;
        Ok(harmonic_from_spectrum(&sp))
    }

    /// `(1/2) sum_k (-1)^k k log det' Delta_k`.
    pub fn finite_torsion(&self) -> Result<f64> {
        let spectra = self.spectra()?;
        Ok(torsion_from_spectra(&spectra))
    }

    /// The same torsion obtained from the heat-type integral
    /// `-int_0^inf [ (1/2) Tr_s(N h'(X_t)) - chi'(H)/2 - (chi'(E) - chi'(H)) h'(i sqrt(t)/2)/2 ] dt/t`,
    /// integrated by the trapezoid rule in `log t`.
    pub fn torsion_integral(&self) -> Result<f64> {
        let spectra = self.spectra()?;
        let chi_e = self.euler().chi_prime as f64;
        let betti: Vec<usize> = spectra.iter().map(|s| s.kernel_dim).collect();
        let chi_h = EulerData::from_ranks(&betti).chi_prime as f64;
        let mut lmin = f64::INFINITY;
        let mut lmax: f64 = 1.0;
        for s in &spectra {
            for &l in s.nonzero() {
                lmin = lmin.min(l);
                lmax = lmax.max(l);
            }
        }
        let lmin = lmin.min(1.0);
        let t_lo = 1e-12 / lmax;
        let t_hi = 240.0 / lmin;
        let integrand = |t: f64| {
            let mut acc = 0.0;
            for (k, s) in spectra.iter().enumerate() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let part: f64 = s.nonzero().iter().map(|&l| h_prime_heat(l * t)).sum();
                acc += sign * k as f64 * part;
            }
            0.5 * acc - 0.5 * (chi_e - chi_h) * h_prime_heat(t)
        };
        Ok(-log_trapezoid(integrand, t_lo, t_hi, 0.05))
    }
}

/// Kernel size of an ascending non-negative spectrum, or an error when an
/// eigenvalue falls inside the ambiguity band around the threshold.
pub fn classify_kernel(degree: usize, vals: &[f64]) -> Result<usize> {
    let lmax = vals.iter().cloned().fold(0.0, f64::max);
    let scale = if lmax > 0.0 { lmax } else { 1.0 };
    let threshold = KERNEL_TOL * scale;
    let mut kernel = 0;
    for &v in vals {
        if v >= 0.1 * threshold && v <= 10.0 * threshold {
            return Err(ComplexError::IndeterminateKernel { degree, eigenvalue: v, threshold });
        }
        if v < threshold {
            kernel += 1;
        }
    }
    Ok(kernel)
}

pub(crate) fn harmonic_from_spectrum(sp: &DegreeSpectrum) -> CMat {
    let r = sp.eigenvalues.len();
    let k = sp.kernel_dim;
    let y = sp.vectors.view((0, 0), (r, k)).into_owned();
    &sp.g_inv_sqrt * y
}

pub(crate) fn torsion_from_spectra(spectra: &[DegreeSpectrum]) -> f64 {
    let mut t = 0.0;
    for (k, s) in spectra.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let logdet: f64 = s.nonzero().iter().map(|l| l.ln()).sum();
        t += sign * k as f64 * logdet;
    }
    0.5 * t
}

/// Trapezoid rule in `x = ln t` for `int f(t) dt / t` over `[t_lo, t_hi]`,
/// with a step close to `dx`.
pub fn log_trapezoid(f: impl Fn(f64) -> f64, t_lo: f64, t_hi: f64, dx: f64) -> f64 {
    let (a, b) = (t_lo.ln(), t_hi.ln());
    let n = (((b - a) / dx).ceil() as usize).max(2);
    let hx = (b - a) / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        s += w * f((a + i as f64 * hx).exp());
    }
    s * hx
}

/// A random complex with prescribed ranks together with its Betti numbers.
///
/// Each degree is split into images of the previous differential, sources
/// of the next one and a harmonic remainder; the elementary complex built on
/// that splitting is conjugated by well-conditioned random changes of basis
/// (unitary times a diagonal in `[0.5, 2]`). When `random_metrics` is set the
/// Gram matrices are random as well.
pub fn random_complex<R: rand::Rng>(rng: &mut R, ranks: &[usize], random_metrics: bool) -> (GradedComplex, Vec<usize>) {
    let n = ranks.len();
    let mut rho = vec![0usize; n.saturating_sub(1)];
    for k in 0..rho.len() {
        let prev = if k == 0 { 0 } else { rho[k - 1] };
        let room = (ranks[k] - prev).min(ranks[k + 1]);
        rho[k] = rng.gen_range(0..=room);
    }
    let betti: Vec<usize> = (0..n)
        .map(|k| ranks[k] - if k == 0 { 0 } else { rho[k - 1] } - rho.get(k).copied().unwrap_or(0))
        .collect();
    let change: Vec<(CMat, CMat)> = ranks
        .iter()
        .map(|&r| {
            let u = linalg::random_unitary(rng, r);
            let scales: Vec<f64> = (0..r).map(|_| rng.gen_range(0.5..2.0)).collect();
            let fwd = CMat::from_fn(r, r, |i, j| u[(i, j)] * scales[j]);
            let inv = CMat::from_fn(r, r, |i, j| u[(j, i)].conj() / scales[i]);
            (fwd, inv)
        })
        .collect();
    let diffs: Vec<CMat> = (0..n.saturating_sub(1))
        .map(|k| {
            let prev = if k == 0 { 0 } else { rho[k - 1] };
            let mut e = linalg::zeros(ranks[k + 1], ranks[k]);
            for j in 0..rho[k] {
                let mag = rng.gen_range(0.5..2.0);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                e[(j, prev + j)] = c(0.0, phase).exp() * mag;
            }
            &change[k + 1].0 * e * &change[k].1
        })
        .collect();
    let metrics: Vec<CMat> = ranks
        .iter()
        .map(|&r| if random_metrics { linalg::random_hpd(rng, r, 0.5, 1.5) } else { linalg::eye(r) })
        .collect();
    let cx = GradedComplex::new(ranks.to_vec(), diffs, metrics).expect("construction yields a complex");
    (cx, betti)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_hpd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: usize, cols: usize, v: &[f64]) -> CMat {
        CMat::from_row_slice(rows, cols, &v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn h_values() {
        assert_eq!(h_scalar(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(h_prime(c(0.0, 0.0)), c(1.0, 0.0));
        assert!((h_scalar(c(1.0, 0.0)) - c(std::f64::consts::E, 0.0)).norm() < 1e-15);
        let a = c(0.0, 0.7);
        assert!((h_prime(a).re - h_prime_heat(4.0 * 0.49)).abs() < 1e-15);
    }

    #[test]
    fn adjoint_hand_example() {
        let cx = GradedComplex::new(vec![1, 1], vec![m(1, 1, &[2.0])], vec![m(1, 1, &[1.0]), m(1, 1, &[4.0])])
            .unwrap();
        let adj = cx.adjoints().unwrap();
        assert!((adj[0][(0, 0)] - c(8.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn orthonormal_adjoint_is_dagger() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = linalg::random_matrix(&mut rng, 3, 2);
        let cx = GradedComplex::standard(vec![2, 3], vec![d.clone()]).unwrap();
        assert!(linalg::frob(&(&cx.adjoints().unwrap()[0] - d.adjoint())) < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d0 = m(1, 1, &[1.0]);
        let d1 = m(1, 1, &[1.0]);
        let err = GradedComplex::standard(vec![1, 1, 1], vec![d0, d1]).unwrap_err();
        assert!(matches!(err, ComplexError::NotAComplex { .. }));
        let err = GradedComplex::new(vec![1], vec![], vec![m(1, 1, &[-1.0])]).unwrap_err();
        assert!(matches!(err, ComplexError::InvalidMetric { .. }));
    }

    #[test]
    fn two_term_laplacians() {
        let cx = GradedComplex::standard(vec![1, 1], vec![m(1, 1, &[3.0])]).unwrap();
        assert!((cx.laplacian(0).unwrap()[(0, 0)].re - 9.0).abs() < 1e-14);
        assert!((cx.laplacian(1).unwrap()[(0, 0)].re - 9.0).abs() < 1e-14);
        let zero = GradedComplex::standard(vec![2, 1], vec![CMat::zeros(1, 2)]).unwrap();
        assert_eq!(linalg::frob(&zero.laplacian(0).unwrap()), 0.0);
    }

    #[test]
    fn euler_examples() {
        let iso = GradedComplex::standard(vec![1, 1], vec![m(1, 1, &[1.0])]).unwrap();
        assert_eq!(iso.euler(), EulerData { chi: 0, chi_prime: -1 });
        assert_eq!(iso.cohomology_euler().unwrap().chi_prime, 0);
        let z = GradedComplex::standard(vec![2, 1], vec![CMat::zeros(1, 2)]).unwrap();
        assert_eq!(z.euler(), EulerData { chi: 1, chi_prime: -1 });
    }

    #[test]
    fn torsion_examples() {
        let z = GradedComplex::standard(vec![2, 1], vec![CMat::zeros(1, 2)]).unwrap();
        assert_eq!(z.finite_torsion().unwrap(), 0.0);
        let two = GradedComplex::standard(vec![1, 1], vec![m(1, 1, &[2.0])]).unwrap();
        let t = two.finite_torsion().unwrap();
        assert!((t + 2f64.ln()).abs() < 1e-14);
        let ti = two.torsion_integral().unwrap();
        assert!((ti - t).abs() < 1e-9, "{ti} vs {t}");
    }

    #[test]
    fn uniform_scaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = linalg::random_matrix(&mut rng, 2, 2);
        let g = vec![random_hpd(&mut rng, 2, 0.5, 1.0), random_hpd(&mut rng, 2, 0.5, 1.0)];
        let cx = GradedComplex::new(vec![2, 2], vec![d], g).unwrap();
        let t0 = cx.finite_torsion().unwrap();
        let t1 = cx.scaled_metrics(7.3).finite_torsion().unwrap();
        assert!((t0 - t1).abs() <= 1e-10 * t0.abs().max(1.0));
    }

    #[test]
    fn ambiguous_kernel_is_reported() {
        let vals = [1e-10, 1.0];
        assert!(matches!(classify_kernel(0, &vals), Err(ComplexError::IndeterminateKernel { .. })));
        assert_eq!(classify_kernel(0, &[1e-18, 1.0]).unwrap(), 1);
    }
}
