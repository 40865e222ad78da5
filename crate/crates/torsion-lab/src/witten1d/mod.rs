//! Witten Laplacians on discretised circles and intervals.
//!
//! The deformed differential `d_T = e^{-TF} d e^{TF}` (with `F = f + p`) is
//! discretised exactly on the kernel: on an edge `(a, b)` of length `h`,
//! `(d_T u)_e = (e^{T(F_b - F_e)} u_b - e^{T(F_a - F_e)} u_a) / h` where `F_e`
//! is the edge average. The Laplacians are `D*D` on 0-forms and `D D*` on
//! 1-forms, so supersymmetry holds exactly and the kernel of the 0-form
//! operator is spanned by the sampled `e^{-TF}`.
//!
//! Grids: on the circle, `N` nodes and `N` edges; with absolute conditions
//! the 0-form unknowns sit at cell centres (Neumann); with relative conditions
//! at interior vertices (Dirichlet).

pub mod agmon;
pub mod profile;
pub mod schauder;
pub mod tridiag;

use crate::linalg::{c, C64};
use crate::par;
use profile::PProfile;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;
use tridiag::{SymTridiag, WeightedLaplacian};

/// Relative kernel threshold for sampled spectra.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WittenError {
    #[error("boundary conditions are not defined on a circle")]
    BoundaryOnCircle,
    #[error("an interval needs absolute or relative boundary conditions")]
    MissingBoundary,
    #[error("grid spacing {h:.3e} exceeds the resolution bound {bound:.3e}")]
    GridTooCoarse { h: f64, bound: f64 },
    #[error("2 T range(F) = {0:.1} exceeds 700; weights would overflow")]
    Overflow(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible profile: {0}")]
    Infeasible(String),
    #[error("precondition violated: value {value:.3e} is not below threshold {threshold:.3e}")]
    Precondition { value: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, WittenError>;

/// `s -> (F, F', F'')`.
pub type PotentialFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

pub fn potential(f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> PotentialFn {
    Arc::new(f)
}

/// `f(s) = cos(k s)`.
pub fn cosine(k: f64) -> PotentialFn {
    potential(move |s| [(k * s).cos(), -k * (k * s).sin(), -k * k * (k * s).cos()])
}

pub fn flat() -> PotentialFn {
    potential(|_| [0.0, 0.0, 0.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    /// Circle of the given length; `twist` is the holonomy angle over `2 pi`.
    Circle { length: f64, twist: f64 },
    Interval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    None,
    Absolute,
    Relative,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::None => "none",
            Boundary::Absolute => "absolute",
            Boundary::Relative => "relative",
        }
    }
}

#[derive(Clone)]
pub struct WittenProblem1D {
    pub topology: Topology,
    pub bc: Boundary,
    pub degree: usize,
    /// Number of cells.
    pub n: usize,
    pub t: f64,
    /// Interface amplitude, kept for reporting.
    pub amplitude: f64,
    potential: PotentialFn,
}

impl std::fmt::Debug for WittenProblem1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WittenProblem1D")
            .field("topology", &self.topology)
            .field("bc", &self.bc)
            .field("degree", &self.degree)
            .field("n", &self.n)
            .field("t", &self.t)
            .field("amplitude", &self.amplitude)
            .finish()
    }
}

/// One edge of the grid: endpoints as unknown indices (`None` for a
/// Dirichlet boundary vertex), endpoint potentials, and the holonomy factor
/// on the right endpoint.
#[derive(Debug, Clone, Copy)]
struct Edge {
    left: Option<usize>,
    right: Option<usize>,
    fl: f64,
    fr: f64,
    phase: C64,
}

impl Edge {
    fn coefficients(&self, t: f64, h: f64) -> (f64, C64) {
        let half = 0.5 * t * (self.fr - self.fl);
        (-(-half).exp() / h, self.phase * (half.exp() / h))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub t: f64,
    pub amplitude: f64,
    pub bc: Boundary,
    pub n: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// Unit-norm (Euclidean) eigenvectors sampled at `positions`.
    pub eigenvectors: Vec<Vec<C64>>,
    /// `||M v - lambda v||` for each unit eigenvector.
    pub residuals: Vec<f64>,
    /// Gershgorin bound on `||M||`, the scale for relative tolerances.
    pub scale: f64,
    pub kernel_dim: usize,
    pub positions: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl WittenProblem1D {
    pub fn new(topology: Topology, bc: Boundary, degree: usize, n: usize, t: f64, potential: PotentialFn) -> Result<Self> {
        match (&topology, bc) {
            (Topology::Circle { .. }, Boundary::Absolute | Boundary::Relative) => return Err(WittenError::BoundaryOnCircle),
            (Topology::Interval { .. }, Boundary::None) => return Err(WittenError::MissingBoundary),
            _ => {}
        }
        if degree > 1 {
            return Err(WittenError::InvalidParameter(format!("form degree must be 0 or 1, got {degree}")));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(WittenError::InvalidParameter(format!("T must be >= 0, got {t}")));
        }
        match topology {
            Topology::Circle { length, .. } if !(length > 0.0) => {
                return Err(WittenError::InvalidParameter("circle length must be positive".into()))
            }
            Topology::Interval { a, b } if !(b > a) => {
                return Err(WittenError::InvalidParameter("interval must have b > a".into()))
            }
            _ => {}
        }
        if n < 3 {
            return Err(WittenError::InvalidParameter("at least 3 cells are required".into()));
        }
        let p = WittenProblem1D { topology, bc, degree, n, t, amplitude: 0.0, potential };
        p.check_resolution()?;
        Ok(p)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::Circle { length, .. } => length / self.n as f64,
            Topology::Interval { a, b } => (b - a) / self.n as f64,
        }
    }

    fn twist(&self) -> f64 {
        match self.topology {
            Topology::Circle { twist, .. } => twist,
            _ => 0.0,
        }
    }

    /// Positions of the 0-form unknowns.
    pub fn node_positions(&self) -> Vec<f64> {
        let h = self.spacing();
        match (self.topology, self.bc) {
            (Topology::Circle { .. }, _) => (0..self.n).map(|i| i as f64 * h).collect(),
            (Topology::Interval { a, .. }, Boundary::Absolute) => (0..self.n).map(|i| a + (i as f64 + 0.5) * h).collect(),
            (Topology::Interval { a, .. }, _) => (1..self.n).map(|i| a + i as f64 * h).collect(),
        }
    }

    /// Positions of the unknowns in the problem's form degree.
    pub fn positions(&self) -> Vec<f64> {
        if self.degree == 0 {
            return self.node_positions();
        }
        let h = self.spacing();
        let nodes = self.node_positions();
        match (self.topology, self.bc) {
            (Topology::Circle { .. }, _) => nodes.iter().map(|x| x + 0.5 * h).collect(),
            (Topology::Interval { .. }, Boundary::Absolute) => nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
            (Topology::Interval { a, .. }, _) => (0..self.n).map(|i| a + (i as f64 + 0.5) * h).collect(),
        }
    }

    /// `(F, F', F'')` at an arbitrary point.
    pub fn potential_at(&self, s: f64) -> [f64; 3] {
        (self.potential)(s)
    }

    fn check_resolution(&self) -> Result<()> {
        let h = self.spacing();
        let mut fmax: f64 = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let (start, len) = match self.topology {
            Topology::Circle { length, .. } => (0.0, length),
            Topology::Interval { a, b } => (a, b - a),
        };
        for i in 0..=2 * self.n {
            let [f, fp, _] = (self.potential)(start + len * i as f64 / (2 * self.n) as f64);
            fmax = fmax.max(fp.abs());
            lo = lo.min(f);
            hi = hi.max(f);
        }
        let bound = 0.1 / (self.t * fmax + 1.0);
        if h > bound * (1.0 + 1e-12) {
            return Err(WittenError::GridTooCoarse { h, bound });
        }
        let span = 2.0 * self.t * (hi - lo);
        if span > 700.0 {
            return Err(WittenError::Overflow(span));
        }
        Ok(())
    }

    fn edges(&self) -> (Vec<Edge>, Vec<f64>) {
        let n = self.n;
        let h = self.spacing();
        let f = |s: f64| (self.potential)(s)[0];
        let one = c(1.0, 0.0);
        match (self.topology, self.bc) {
            (Topology::Circle { twist, .. }, _) => {
                let fv: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
                let hol = c(0.0, 2.0 * PI * twist).exp();
                let edges = (0..n)
                    .map(|i| {
                        let j = (i + 1) % n;
                        Edge { left: Some(i), right: Some(j), fl: fv[i], fr: fv[j], phase: if j == 0 { hol } else { one } }
                    })
                    .collect();
                (edges, fv)
            }
            (Topology::Interval { a, .. }, Boundary::Absolute) => {
                let fv: Vec<f64> = (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).collect();
                let edges = (0..n - 1)
                    .map(|i| Edge { left: Some(i), right: Some(i + 1), fl: fv[i], fr: fv[i + 1], phase: one })
                    .collect();
                (edges, fv)
            }
            (Topology::Interval { a, .. }, _) => {
                let all: Vec<f64> = (0..=n).map(|i| f(a + i as f64 * h)).collect();
                let idx = |v: usize| if v == 0 || v == n { None } else { Some(v - 1) };
                let edges = (0..n)
                    .map(|i| Edge { left: idx(i), right: idx(i + 1), fl: all[i], fr: all[i + 1], phase: one })
                    .collect();
                (edges, all[1..n].to_vec())
            }
        }
    }

    /// The Witten Laplacian in the problem's degree as a (periodic) tridiagonal matrix.
    pub fn assemble(&self) -> SymTridiag {
        let (edges, _) = self.edges();
        let (t, h) = (self.t, self.spacing());
        let periodic = matches!(self.topology, Topology::Circle { .. });
        let coef: Vec<(f64, C64)> = edges.iter().map(|e| e.coefficients(t, h)).collect();
        if self.degree == 0 {
            let m = self.node_positions().len();
            let mut diag = vec![0.0; m];
            let mut off = vec![0.0; m - 1];
            let mut corner = c(0.0, 0.0);
            for (e, &(cl, cr)) in edges.iter().zip(&coef) {
                if let Some(l) = e.left {
                    diag[l] += cl * cl;
                }
                if let Some(r) = e.right {
                    diag[r] += cr.norm_sqr();
                }
                if let (Some(l), Some(r)) = (e.left, e.right) {
                    let v = cr * cl;
                    if r == l + 1 {
                        off[l] += v.re;
                    } else {
                        corner += v.conj();
                    }
                }
            }
            SymTridiag::new(diag, off, if periodic { corner } else { c(0.0, 0.0) })
        } else {
            let m = edges.len();
            let diag: Vec<f64> = coef
                .iter()
                .zip(&edges)
                .map(|(&(cl, cr), e)| {
                    let mut d = 0.0;
                    if e.left.is_some() {
                        d += cl * cl;
                    }
                    if e.right.is_some() {
                        d += cr.norm_sqr();
                    }
                    d
                })
                .collect();
            // Consecutive edges share the right node of the first.
            let off: Vec<f64> = (0..m - 1).map(|i| (coef[i].1 * coef[i + 1].0).re).collect();
            let corner = if periodic { coef[0].0 * coef[m - 1].1.conj() } else { c(0.0, 0.0) };
            SymTridiag::new(diag, off, corner)
        }
    }

    /// Weighted-Laplacian form of the untwisted 0-form operator.
    fn weighted_laplacian(&self) -> Option<WeightedLaplacian> {
        if self.degree != 0 || self.twist().abs() > 0.0 {
            return None;
        }
        let (edges, fv) = self.edges();
        let h2 = self.spacing().powi(2);
        let lo = edges.iter().map(|e| e.fl.min(e.fr)).fold(f64::INFINITY, f64::min);
        let hi = edges.iter().map(|e| e.fl.max(e.fr)).fold(f64::NEG_INFINITY, f64::max);
        let mid = 0.5 * (lo + hi);
        let t = self.t;
        let m = fv.len();
        let masses: Vec<f64> = fv.iter().map(|&f| (-2.0 * t * (f - mid)).exp()).collect();
        let mut weights = vec![0.0; m];
        let mut ground = vec![0.0; m];
        for e in &edges {
            let w = (-t * (e.fl + e.fr - 2.0 * mid)).exp() / h2;
            match (e.left, e.right) {
                (Some(l), Some(_)) => weights[l] = w,
                (Some(l), None) => ground[l] += w,
                (None, Some(r)) => ground[r] += w,
                (None, None) => {}
            }
        }
        Some(WeightedLaplacian {
            weights,
            masses,
            ground,
            periodic: matches!(self.topology, Topology::Circle { .. }),
        })
    }

    /// Lowest `k` eigenvalues (no vectors).
    pub fn eigenvalues(&self, k: usize) -> Vec<f64> {
        let mat = self.assemble();
        let k = k.min(mat.len());
        let hi = mat.gershgorin().1.max(1e-300);
        let coarse = tridiag::bisect_lowest(|s| mat.count_below(s), k, hi, 1e-13);
        // Values far below the matrix scale are recomputed from the
        // cancellation-free weighted form when one is available.
        let small = KERNEL_TOL.sqrt() * mat.scale();
        match self.weighted_laplacian() {
            Some(w) if coarse.iter().any(|&l| l < small) => {
                let k_small = coarse.iter().filter(|&&l| l < small).count();
                let mut fine = tridiag::bisect_lowest(|s| w.count_below(s), k_small, small, 1e-13);
                fine.extend_from_slice(&coarse[k_small..]);
                fine
            }
            _ => coarse,
        }
    }

    /// Lowest `k` eigenpairs.
    pub fn spectrum(&self, k: usize) -> Result<SpectrumResult> {
        let size = self.positions().len();
        if k > size.div_ceil(4).max(1) {
            return Err(WittenError::InvalidParameter(format!("k = {k} exceeds N/4 = {}", size / 4)));
        }
        let mat = self.assemble();
        let values = self.eigenvalues(k);
        let scale = mat.scale();
        let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(k);
        for (i, &l) in values.iter().enumerate() {
            let cluster: Vec<Vec<C64>> = values[..i]
                .iter()
                .zip(&vectors)
                .filter(|(&lj, _)| (lj - l).abs() <= 1e-8 * scale)
                .map(|(_, v)| v.clone())
                .collect();
            vectors.push(tridiag::inverse_iteration(&mat, l, &cluster, 0x5EED + i as u64));
        }
        let residuals = par::map(&(0..k).collect::<Vec<_>>(), |&i| tridiag::residual(&mat, values[i], &vectors[i]));
        let kernel_dim = values.iter().filter(|&&l| l <= KERNEL_TOL * scale).count();
        Ok(SpectrumResult {
            eigenvalues: values,
            eigenvectors: vectors,
            residuals,
            scale,
            kernel_dim,
            positions: self.positions(),
            meta: SpectrumMeta { t: self.t, amplitude: self.amplitude, bc: self.bc, n: self.n, degree: self.degree },
        })
    }

    /// Sampled `(F, F')` at the 0-form unknowns.
    pub fn sampled_potential(&self) -> (Vec<f64>, Vec<f64>) {
        let pos = self.node_positions();
        let vals: Vec<[f64; 3]> = pos.iter().map(|&s| (self.potential)(s)).collect();
        (vals.iter().map(|v| v[0]).collect(), vals.iter().map(|v| v[1]).collect())
    }
}

/// Smallest number of cells on a domain of length `len` satisfying the
/// resolution bound for slope bound `fmax`.
pub fn cells_for(len: f64, t: f64, fmax: f64) -> usize {
    let bound = 0.1 / (t * fmax + 1.0);
    (len / bound).ceil() as usize + 1
}

/// Circle potential `f + P_A` with interfaces at `y_a` (rising) and `y_b`
/// (falling), `y_a < y_b`, each profile supported within `2r` of its centre.
pub fn glued_potential(f: PotentialFn, prof: PProfile, y_a: f64, y_b: f64, length: f64) -> PotentialFn {
    potential(move |s| {
        let [v, d1, d2] = f(s);
        let wrap = |x: f64| {
            let y = x.rem_euclid(length);
            if y > 0.5 * length {
                y - length
            } else {
                y
            }
        };
        let (da, db) = (wrap(s - y_a), wrap(s - y_b));
        let r2 = 2.0 * prof.r;
        let p = if da.abs() <= r2 {
            prof.eval(da)
        } else if db.abs() <= r2 {
            let q = prof.eval(db);
            [-q[0], -q[1], -q[2]]
        } else {
            let inside = (s - y_a).rem_euclid(length) < (y_b - y_a).rem_euclid(length);
            let pl = prof.plateau();
            [if inside { pl } else { -pl }, 0.0, 0.0]
        };
        [v + p[0], d1 + p[1], d2 + p[2]]
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluingSetup {
    pub t: f64,
    pub r: f64,
    pub y_a: f64,
    pub y_b: f64,
    /// Number of eigenvalues compared.
    pub k: usize,
    /// Largest slope of `f`, used to size the grids.
    pub f_slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluingRow {
    pub amplitude: f64,
    pub circle: Vec<f64>,
    pub gaps: Vec<f64>,
    pub small_count: usize,
    pub c1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluingReport {
    /// Merged lowest eigenvalues of the absolute and relative pieces.
    pub split: Vec<f64>,
    pub absolute: Vec<f64>,
    pub relative: Vec<f64>,
    pub rows: Vec<GluingRow>,
    pub cutoff: f64,
    pub split_small_count: usize,
    /// Numerical kernel dimensions (eigenvalues at most `KERNEL_TOL` times
    /// the matrix scale) of the absolute and relative pieces.
    pub absolute_kernel: usize,
    pub relative_kernel: usize,
    /// Gap ratio at the cutoff is below 10.
    pub ambiguous: bool,
}

/// Cutoff between the small cluster and the rest of an ascending spectrum:
/// geometric mean across the largest consecutive ratio. Returns the cutoff
/// and that ratio. Values below unit roundoff times the largest value are
/// treated as equal.
pub fn cluster_cutoff(values: &[f64]) -> (f64, f64) {
    let top = values.iter().cloned().fold(0.0, f64::max);
    let floor = (f64::EPSILON * top).max(f64::MIN_POSITIVE);
    let mut best = (values.last().copied().unwrap_or(1.0) * 2.0, 1.0);
    let mut ratio_best = 0.0;
    for w in values.windows(2) {
        let (a, b) = (w[0].max(floor), w[1].max(floor));
        let ratio = b / a;
        if ratio > ratio_best {
            ratio_best = ratio;
            best = ((a * b).sqrt(), ratio);
        }
    }
    best
}

/// Compares the circle problem with interface amplitude `A` against the
/// absolute problem on `Z1 = [y_b + r, y_a + 2pi - r]` and the relative one on
/// `Z2 = [y_a + r, y_b - r]`, for each `A` in `amplitudes`.
pub fn gluing_scan(f: PotentialFn, setup: &GluingSetup, amplitudes: &[f64]) -> Result<GluingReport> {
    let length = 2.0 * PI;
    let (t, r) = (setup.t, setup.r);
    if !(setup.y_a < setup.y_b && setup.y_b - setup.y_a > 4.0 * r && length - (setup.y_b - setup.y_a) > 4.0 * r) {
        return Err(WittenError::InvalidParameter("interfaces must be at least 4r apart".into()));
    }
    let a_max = amplitudes.iter().cloned().fold(0.0, f64::max);
    let slope = setup.f_slope + a_max * r;
    let z1 = WittenProblem1D::new(
        Topology::Interval { a: setup.y_b + r, b: setup.y_a + length - r },
        Boundary::Absolute,
        0,
        cells_for(length - (setup.y_b - setup.y_a) - 2.0 * r, t, slope),
        t,
        f.clone(),
    )?;
    let z2 = WittenProblem1D::new(
        Topology::Interval { a: setup.y_a + r, b: setup.y_b - r },
        Boundary::Relative,
        0,
        cells_for(setup.y_b - setup.y_a - 2.0 * r, t, slope),
        t,
        f.clone(),
    )?;
    let absolute = z1.eigenvalues(setup.k);
    let relative = z2.eigenvalues(setup.k);
    let kernel = |p: &WittenProblem1D, v: &[f64]| {
        let tol = KERNEL_TOL * p.assemble().scale();
        v.iter().filter(|&&l| l <= tol).count()
    };
    let (absolute_kernel, relative_kernel) = (kernel(&z1, &absolute), kernel(&z2, &relative));
    let mut split: Vec<f64> = absolute.iter().chain(&relative).cloned().collect();
    split.sort_by(f64::total_cmp);
    split.truncate(setup.k);
    let (cutoff, ratio) = cluster_cutoff(&split);
    let split_small_count = split.iter().filter(|&&l| l < cutoff).count();
    let n_circle = cells_for(length, t, slope);
    let rows: Vec<Result<GluingRow>> = par::map(amplitudes, |&a| {
        let prof = PProfile::new(a, r)?;
        let pot = glued_potential(f.clone(), prof, setup.y_a, setup.y_b, length);
        let circle = WittenProblem1D::new(Topology::Circle { length, twist: 0.0 }, Boundary::None, 0, n_circle, t, pot)?
            .with_amplitude(a)
            .eigenvalues(setup.k);
        let gaps = circle.iter().zip(&split).map(|(x, y)| (x - y).abs()).collect();
        let small_count = circle.iter().filter(|&&l| l < cutoff).count();
        Ok(GluingRow { amplitude: a, circle, gaps, small_count, c1: prof.c1 })
    });
    Ok(GluingReport {
        split,
        absolute,
        relative,
        rows: rows.into_iter().collect::<Result<_>>()?,
        cutoff,
        split_small_count,
        absolute_kernel,
        relative_kernel,
        ambiguous: ratio < 10.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub ts: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Smallest Agmon distance (at `T = 1`) from a well to a saddle.
    pub barrier: f64,
    pub prediction: f64,
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits `log lambda_branch` against `T` on the untwisted circle of length
/// `2 pi` for 0-forms. Values that underflow to zero truncate the ladder.
pub fn small_eigenvalue_scan(f: PotentialFn, f_slope: f64, ts: &[f64], branch: usize) -> Result<DecayFit> {
    let length = 2.0 * PI;
    let t_top = ts.iter().cloned().fold(0.0, f64::max);
    let n = cells_for(length, t_top, f_slope);
    let vals: Vec<Result<f64>> = par::map(ts, |&t| {
        let p = WittenProblem1D::new(Topology::Circle { length, twist: 0.0 }, Boundary::None, 0, n, t, f.clone())?;
        Ok(p.eigenvalues(branch + 1)[branch])
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    let kept: Vec<usize> = (0..ts.len()).take_while(|&i| vals[i] > 0.0).collect();
    if kept.len() < 2 {
        return Err(WittenError::InvalidParameter("fewer than two resolvable eigenvalues on the T ladder".into()));
    }
    let x: Vec<f64> = kept.iter().map(|&i| ts[i]).collect();
    let y: Vec<f64> = kept.iter().map(|&i| vals[i].ln()).collect();
    let (slope, intercept) = linear_fit(&x, &y);
    let probe = WittenProblem1D::new(Topology::Circle { length, twist: 0.0 }, Boundary::None, 0, n, 1.0, f)?;
    let barrier = well_to_saddle_barrier(&probe);
    Ok(DecayFit { ts: x, eigenvalues: kept.iter().map(|&i| vals[i]).collect(), slope, intercept, barrier, prediction: -2.0 * barrier })
}

/// Smallest `T = 1` Agmon distance from the set of local minima to a local maximum.
pub fn well_to_saddle_barrier(p: &WittenProblem1D) -> f64 {
    let (fv, fp) = p.sampled_potential();
    let periodic = matches!(p.topology, Topology::Circle { .. });
    let crit = agmon::critical_nodes(&fv, &fp, periodic);
    let minima: Vec<usize> = crit.iter().filter(|c| c.1).map(|c| c.0).collect();
    let rho = agmon::agmon_distance(&fv, 1.0, &minima, periodic);
    crit.iter().filter(|c| !c.1).map(|c| rho[c.0]).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgmonRow {
    pub t: f64,
    pub eigenvalue: f64,
    pub decay: agmon::AgmonDecay,
}

/// Weighted decay `sup log|u| + b rho_T` of the ground state on the untwisted
/// circle of length `2 pi`, outside `{rho_T <= radius}` with `rho_T` measured
/// from all critical nodes.
pub fn agmon_scan(f: PotentialFn, f_slope: f64, ts: &[f64], b: f64, radius: f64) -> Result<Vec<AgmonRow>> {
    let rows = par::map(ts, |&t| {
        let length = 2.0 * PI;
        let p = WittenProblem1D::new(
            Topology::Circle { length, twist: 0.0 },
            Boundary::None,
            0,
            cells_for(length, t, f_slope),
            t,
            f.clone(),
        )?;
        let sp = p.spectrum(1)?;
        let (fv, fp) = p.sampled_potential();
        let sources: Vec<usize> = agmon::critical_nodes(&fv, &fp, true).iter().map(|c| c.0).collect();
        let rho = agmon::agmon_distance(&fv, t, &sources, true);
        let u: Vec<f64> = sp.eigenvectors[0].iter().map(|z| z.norm()).collect();
        let decay = agmon::agmon_decay_check(&u, &rho, &fp, sp.eigenvalues[0], b, t, radius)?;
        Ok(AgmonRow { t, eigenvalue: sp.eigenvalues[0], decay })
    });
    rows.into_iter().collect()
}

/// Largest relative mismatch between the nonzero parts of the lowest `k`
/// eigenvalues of the 0-form and 1-form operators of `p`.
pub fn supersymmetry_defect(p: &WittenProblem1D, k: usize) -> f64 {
    let mut p0 = p.clone();
    p0.degree = 0;
    let mut p1 = p.clone();
    p1.degree = 1;
    let tol = KERNEL_TOL * p0.assemble().scale();
    let nz = |v: Vec<f64>| -> Vec<f64> { v.into_iter().filter(|&l| l > tol).collect() };
    let a = nz(p0.eigenvalues(k + 2));
    let b = nz(p1.eigenvalues(k + 2));
    a.iter().zip(&b).take(k).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs())).fold(0.0, f64::max)
}

/// Neumann problem for `f(s) = s^3/3` on `[-T^{-1/3}, T^{-1/3}]` with `n` cells.
pub fn cubic_model(t: f64, n: usize) -> Result<WittenProblem1D> {
    if !(t >= 1.0) {
        return Err(WittenError::InvalidParameter(format!("cubic model needs T >= 1, got {t}")));
    }
    let l = t.powf(-1.0 / 3.0);
    WittenProblem1D::new(
        Topology::Interval { a: -l, b: l },
        Boundary::Absolute,
        0,
        n,
        t,
        potential(|s| [s * s * s / 3.0, s * s, 2.0 * s]),
    )
}

pub fn cubic_model_eigs(t: f64, k: usize, n: usize) -> Result<Vec<f64>> {
    Ok(cubic_model(t, n)?.eigenvalues(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn boundary_validation() {
        let circle = Topology::Circle { length: 1.0, twist: 0.0 };
        assert_eq!(
            WittenProblem1D::new(circle, Boundary::Absolute, 0, 10, 0.0, flat()).unwrap_err(),
            WittenError::BoundaryOnCircle
        );
        let iv = Topology::Interval { a: 0.0, b: 1.0 };
        assert_eq!(WittenProblem1D::new(iv, Boundary::None, 0, 10, 0.0, flat()).unwrap_err(), WittenError::MissingBoundary);
        assert!(matches!(
            WittenProblem1D::new(iv, Boundary::Absolute, 0, 10, 50.0, cosine(1.0)),
            Err(WittenError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn flat_circle_fourier() {
        let n = 256;
        let p = WittenProblem1D::new(Topology::Circle { length: 2.0 * PI, twist: 0.0 }, Boundary::None, 0, n, 3.0, flat()).unwrap();
        let h = p.spacing();
        let scale = p.assemble().scale();
        let ev = p.eigenvalues(3);
        let expect = 4.0 * (PI / n as f64).sin().powi(2) / (h * h);
        assert_eq!(ev[0], 0.0);
        // The periodic Sturm count resolves a degenerate pair only to a small
        // multiple of the matrix scale times the unit roundoff.
        assert!((ev[1] - expect).abs() < 1e-10 * scale);
        assert!((ev[2] - expect).abs() < 1e-10 * scale);
    }

    #[test]
    fn flat_twisted_circle_fourier() {
        let n = 300;
        let a = 0.3;
        let p = WittenProblem1D::new(Topology::Circle { length: 2.0 * PI, twist: a }, Boundary::None, 0, n, 0.0, flat()).unwrap();
        let h = p.spacing();
        let ev = p.eigenvalues(5);
        let mut expect: Vec<f64> = (-3..=3).map(|k| 4.0 * (PI * (k as f64 + a) / n as f64).sin().powi(2) / (h * h)).collect();
        expect.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-11 * y, "{x} {y}");
        }
    }

    #[test]
    fn assembled_matches_dense_operator() {
        let pot = cosine(2.0);
        for (topo, bc) in [
            (Topology::Circle { length: 2.0 * PI, twist: 0.3 }, Boundary::None),
            (Topology::Interval { a: 0.1, b: 2.0 }, Boundary::Absolute),
            (Topology::Interval { a: 0.1, b: 2.0 }, Boundary::Relative),
        ] {
            let p0 = WittenProblem1D::new(topo, bc, 0, 400, 1.0, pot.clone()).unwrap();
            let p1 = WittenProblem1D::new(topo, bc, 1, 400, 1.0, pot.clone()).unwrap();
            let m0 = p0.assemble().to_dense();
            let m1 = p1.assemble().to_dense();
            assert!(linalg::hermitian_defect(&m0) < 1e-14);
            let e0 = linalg::eigvalsh(&m0);
            let e1 = linalg::eigvalsh(&m1);
            let nz = |v: &[f64]| -> Vec<f64> { v.iter().cloned().filter(|&x| x > 1e-8).collect() };
            let (a, b) = (nz(&e0), nz(&e1));
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9 * x.max(1.0));
            }
        }
    }

    #[test]
    fn kernels_by_boundary_condition() {
        let pot = cosine(1.0);
        let circle = WittenProblem1D::new(Topology::Circle { length: 2.0 * PI, twist: 0.0 }, Boundary::None, 0, 400, 2.0, pot.clone()).unwrap();
        assert_eq!(circle.spectrum(3).unwrap().kernel_dim, 1);
        let abs = WittenProblem1D::new(Topology::Interval { a: 0.3, b: 2.5 }, Boundary::Absolute, 0, 400, 2.0, pot.clone()).unwrap();
        assert_eq!(abs.spectrum(2).unwrap().kernel_dim, 1);
        let rel = WittenProblem1D::new(Topology::Interval { a: 0.3, b: 2.5 }, Boundary::Relative, 1, 400, 2.0, pot).unwrap();
        assert_eq!(rel.spectrum(2).unwrap().kernel_dim, 1);
    }

    #[test]
    fn profile_potential_is_continuous() {
        let prof = PProfile::new(5.0, 0.2).unwrap();
        let pot = glued_potential(cosine(2.0), prof, 1.0, 4.0, 2.0 * PI);
        let mut prev = pot(0.0)[0];
        for i in 1..=20000 {
            let v = pot(2.0 * PI * i as f64 / 20000.0)[0];
            assert!((v - prev).abs() < 1e-2, "jump at {i}");
            prev = v;
        }
    }
}
