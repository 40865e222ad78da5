//! Dense complex linear algebra shared by the finite-dimensional modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Frobenius norm.
pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Relative distance from Hermitian.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = frob(m).max(f64::MIN_POSITIVE);
    frob(&(m - m.adjoint())) / scale
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let fj = c(f(vals[j]), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    &scaled * vecs.adjoint()
}

pub fn hpd_sqrt(m: &CMat) -> CMat {
    herm_fn(m, f64::sqrt)
}

pub fn hpd_inv_sqrt(m: &CMat) -> CMat {
    herm_fn(m, |x| 1.0 / x.sqrt())
}

pub fn hpd_pow(m: &CMat, p: f64) -> CMat {
    herm_fn(m, |x| x.powf(p))
}

pub fn hpd_log(m: &CMat) -> CMat {
    herm_fn(m, f64::ln)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// log |det m| via LU.
pub fn log_abs_det(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let lu = m.clone().lu();
    let u = lu.u();
    (0..u.nrows()).map(|i| u[(i, i)].norm().ln()).sum()
}

/// Numerical rank from singular values with a relative cutoff.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn random_matrix<R: Rng>(rng: &mut R, r: usize, c_: usize) -> CMat {
    CMat::from_fn(r, c_, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random Hermitian positive-definite matrix with spectrum in roughly `[lo, lo + spread]`.
pub fn random_hpd<R: Rng>(rng: &mut R, n: usize, lo: f64, spread: f64) -> CMat {
    let b = random_matrix(rng, n, n);
    let g = &b * b.adjoint();
    let scale = frob(&g).max(1e-300);
    g * c(spread / scale, 0.0) + eye(n) * c(lo, 0.0)
}

/// Random unitary from the QR factorisation of a complex Gaussian-like matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let qr = random_matrix(rng, n, n).qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            out[(i, j)] *= phase;
        }
    }
    out
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}
