//! Flat superconnection families over a discretised circle and their
//! characteristic forms.
//!
//! Samples sit at `s_j = 2 pi j / m`. Edge `j` joins sample `j` to sample
//! `j + 1 (mod m)` and carries the parallel transport `P_j : E_j -> E_{j+1}`.
//! One-forms are stored as their `ds` coefficient at edge midpoints.

use crate::graded_complex::{h_prime_heat, ComplexError, EulerData, GradedComplex};
use crate::linalg::{self, c, CMat, C64};
use crate::par;
use crate::quadrature;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Per-sample, per-degree Gram matrices.
pub type FamilyMetric = Vec<Vec<CMat>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("at least 8 base samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("transport on edge {edge} is not flat (residual {residual:.3e})")]
    NotFlat { edge: usize, residual: f64 },
    #[error("transport on edge {edge} in degree {degree} is singular")]
    SingularTransport { edge: usize, degree: usize },
    #[error("metric path is not positive at l = {l} (sample {sample})")]
    NonPositivePath { l: f64, sample: usize },
    #[error("need at least {min} quadrature nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("require 0 < tau < t_max, got tau = {tau}, t_max = {t_max}")]
    InvalidTau { tau: f64, t_max: f64 },
    #[error("integrand at t_max = {t_max} is {value:.3e} at sample {sample}; increase t_max")]
    TailNotConverged { sample: usize, value: f64, t_max: f64 },
}

pub type Result<T> = std::result::Result<T, FormError>;

/// A form on the circle base: values at samples and `ds` coefficients at edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormOnBase {
    pub degree0: Vec<C64>,
    pub degree1: Vec<C64>,
}

impl FormOnBase {
    pub fn zero(m: usize) -> Self {
        FormOnBase { degree0: vec![c(0.0, 0.0); m], degree1: vec![c(0.0, 0.0); m] }
    }

    /// Edge differences of the degree-0 part divided by the spacing.
    pub fn d_base(&self) -> Vec<C64> {
        let m = self.degree0.len();
        let ds = 2.0 * PI / m as f64;
        (0..m).map(|j| (self.degree0[(j + 1) % m] - self.degree0[j]) / ds).collect()
    }
}

fn sgn(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone)]
pub struct SuperconnectionFamily {
    ranks: Vec<usize>,
    v: Vec<Vec<CMat>>,
    transport: Vec<Vec<CMat>>,
}

impl SuperconnectionFamily {
    pub fn new(ranks: Vec<usize>, v: Vec<Vec<CMat>>, transport: Vec<Vec<CMat>>) -> Result<Self> {
        let m = v.len();
        if m < 8 {
            return Err(FormError::TooFewSamples(m));
        }
        if transport.len() != m {
            return Err(FormError::Shape(format!("{m} samples need {m} edges, got {}", transport.len())));
        }
        for (j, d) in v.iter().enumerate() {
            // Shape and square-zero checks reuse the complex constructor.
            GradedComplex::standard(ranks.clone(), d.clone())
                .map_err(|e| match e {
                    ComplexError::Shape(s) => FormError::Shape(format!("sample {j}: {s}")),
                    other => FormError::Complex(other),
                })?;
        }
        for (j, p) in transport.iter().enumerate() {
            if p.len() != ranks.len() {
                return Err(FormError::Shape(format!("edge {j} has {} transport blocks", p.len())));
            }
            for (k, pk) in p.iter().enumerate() {
                if pk.nrows() != ranks[k] || pk.ncols() != ranks[k] {
                    return Err(FormError::Shape(format!("edge {j} degree {k} transport has wrong size")));
                }
                if ranks[k] > 0 && linalg::inverse(pk).is_none() {
                    return Err(FormError::SingularTransport { edge: j, degree: k });
                }
            }
            let next = &v[(j + 1) % m];
            let mut residual: f64 = 0.0;
            for k in 0..ranks.len() - 1 {
                let lhs = &p[k + 1] * &v[j][k];
                let rhs = &next[k] * &p[k];
                let scale = 1.0f64.max(linalg::frob(&lhs)).max(linalg::frob(&rhs));
                residual = residual.max(linalg::frob(&(lhs - rhs)) / scale);
            }
            if residual > 1e-9 {
                return Err(FormError::NotFlat { edge: j, residual });
            }
        }
        Ok(SuperconnectionFamily { ranks, v, transport })
    }

    /// Constant differential with trivial transport on `m` samples.
    pub fn constant(ranks: Vec<usize>, v: Vec<CMat>, m: usize) -> Result<Self> {
        let id: Vec<CMat> = ranks.iter().map(|&r| linalg::eye(r)).collect();
        Self::new(ranks, vec![v; m], vec![id; m])
    }

    pub fn samples(&self) -> usize {
        self.v.len()
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.samples() as f64
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn differential(&self, j: usize) -> &[CMat] {
        &self.v[j]
    }

    pub fn transport(&self, j: usize) -> &[CMat] {
        &self.transport[j]
    }

    /// Ordered product `P_{m-1} ... P_0` in each degree.
    pub fn holonomy(&self) -> Vec<CMat> {
        (0..self.ranks.len())
            .map(|k| {
                let mut h = linalg::eye(self.ranks[k]);
                for p in &self.transport {
                    h = &p[k] * h;
                }
                h
            })
            .collect()
    }

    /// The same metric at every sample.
    pub fn constant_metric(&self, g: &[CMat]) -> FamilyMetric {
        vec![g.to_vec(); self.samples()]
    }

    pub fn identity_metric(&self) -> FamilyMetric {
        let g: Vec<CMat> = self.ranks.iter().map(|&r| linalg::eye(r)).collect();
        self.constant_metric(&g)
    }

    pub fn fiber(&self, j: usize, metric: &FamilyMetric) -> Result<GradedComplex> {
        Ok(GradedComplex::new(self.ranks.clone(), self.v[j].clone(), metric[j].clone())?)
    }

    fn check_metric(&self, metric: &FamilyMetric) -> Result<()> {
        if metric.len() != self.samples() {
            return Err(FormError::Shape(format!(
                "metric has {} samples, family has {}",
                metric.len(),
                self.samples()
            )));
        }
        Ok(())
    }

    /// Euler data of the fibre ranks.
    pub fn euler(&self) -> EulerData {
        EulerData::from_ranks(&self.ranks)
    }
}

/// Data of the adjoint superconnection `A' = v* + nabla'`.
#[derive(Debug, Clone)]
pub struct AdjointData {
    /// Per-sample metric adjoints of the differentials.
    pub v_star: Vec<Vec<CMat>>,
    /// Per-edge adjoint transports `G_{j+1}^{-1} P_j^{-dagger} G_j`.
    pub transport: Vec<Vec<CMat>>,
    /// Per-sample `X^{[0]} = (v* - v) / 2` on the total space.
    pub x0: Vec<CMat>,
}

/// Assembles the total odd operator from per-degree blocks mapping `k -> k + shift`.
fn total_operator(ranks: &[usize], up: &[CMat], down: &[CMat]) -> CMat {
    let offsets: Vec<usize> = ranks
        .iter()
        .scan(0, |acc, &r| {
            let o = *acc;
            *acc += r;
            Some(o)
        })
        .collect();
    let n: usize = ranks.iter().sum();
    let mut out = CMat::zeros(n, n);
    for k in 0..up.len() {
        let mut blk = out.view_mut((offsets[k + 1], offsets[k]), (ranks[k + 1], ranks[k]));
        blk += &up[k];
    }
    for k in 0..down.len() {
        let mut blk = out.view_mut((offsets[k], offsets[k + 1]), (ranks[k], ranks[k + 1]));
        blk += &down[k];
    }
    out
}

pub fn adjoint_superconnection(fam: &SuperconnectionFamily, metric: &FamilyMetric) -> Result<AdjointData> {
    fam.check_metric(metric)?;
    let m = fam.samples();
    let mut v_star = Vec::with_capacity(m);
    let mut x0 = Vec::with_capacity(m);
    for j in 0..m {
        let cx = fam.fiber(j, metric)?;
        let adj = cx.adjoints()?;
        let minus_v: Vec<CMat> = fam.v[j].iter().map(|d| d * c(-0.5, 0.0)).collect();
        let half_adj: Vec<CMat> = adj.iter().map(|d| d * c(0.5, 0.0)).collect();
        x0.push(total_operator(&fam.ranks, &minus_v, &half_adj));
        v_star.push(adj);
    }
    let mut transport = Vec::with_capacity(m);
    for j in 0..m {
        let mut blocks = Vec::with_capacity(fam.ranks.len());
        for k in 0..fam.ranks.len() {
            let p = &fam.transport[j][k];
            let pinv = linalg::inverse(p).ok_or(FormError::SingularTransport { edge: j, degree: k })?;
            let gn_inv = linalg::inverse(&metric[(j + 1) % m][k]).ok_or(FormError::Complex(
                ComplexError::InvalidMetric { degree: k, min_eig: 0.0 },
            ))?;
            blocks.push(gn_inv * pinv.adjoint() * &metric[j][k]);
        }
        transport.push(blocks);
    }
    Ok(AdjointData { v_star, transport, x0 })
}

/// Connection form and geodesic midpoint metric of one edge, in the frame of
/// its starting sample.
struct EdgeGeometry {
    omega: Vec<CMat>,
    mid: Vec<CMat>,
}

fn edge_geometry(fam: &SuperconnectionFamily, metric: &FamilyMetric, j: usize) -> EdgeGeometry {
    let m = fam.samples();
    let ds = fam.step();
    let mut omega = Vec::new();
    let mut mid = Vec::new();
    for k in 0..fam.ranks.len() {
        let g = &metric[j][k];
        let p = &fam.transport[j][k];
        let pulled = p.adjoint() * &metric[(j + 1) % m][k] * p;
        let gs = linalg::hpd_sqrt(g);
        let gis = linalg::hpd_inv_sqrt(g);
        let mm = linalg::hermitian_part(&(&gis * pulled * &gis));
        omega.push(&gis * linalg::hpd_log(&mm) * &gs * c(1.0 / ds, 0.0));
        mid.push(linalg::hermitian_part(&(&gs * linalg::hpd_sqrt(&mm) * &gs)));
    }
    EdgeGeometry { omega, mid }
}

/// `(1/2) Tr_s[omega h'(X_t)]` for a connection form `omega` and the complex `cx`.
fn half_supertrace_heat(cx: &GradedComplex, omega: &[CMat], t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, w) in omega.iter().enumerate() {
        if w.nrows() == 0 {
            continue;
        }
        let g = cx.laplacian_function(k, |x| h_prime_heat(t * x));
        acc += sgn(k) * linalg::trace(&(w * g)).re;
    }
    0.5 * acc
}

/// Chern–Weil form of `A` for the metric rescaled to time `t`.
///
/// Degree 0 is `sqrt(2 pi i) Tr_s h(X_t)`, degree 1 is `Tr_s[omega/2 h'(X_t)]`
/// evaluated at the geodesic midpoint of each edge.
pub fn h_form_at(fam: &SuperconnectionFamily, metric: &FamilyMetric, t: f64) -> Result<FormOnBase> {
    fam.check_metric(metric)?;
    let m = fam.samples();
    let root = (c(0.0, 2.0 * PI)).sqrt();
    let adj = adjoint_superconnection(fam, metric)?;
    let deg0: Vec<C64> = par::map_range(m, |j| {
        let x = &adj.x0[j] * c(t.sqrt(), 0.0);
        let x2 = &x * &x;
        let hx = &x * x2.exp();
        let mut off = 0;
        let mut st = c(0.0, 0.0);
        for (k, &r) in fam.ranks.iter().enumerate() {
            for i in 0..r {
                st += hx[(off + i, off + i)] * sgn(k);
            }
            off += r;
        }
        root * st
    });
    let deg1: Vec<Result<C64>> = par::map_range(m, |j| {
        let geo = edge_geometry(fam, metric, j);
        let cx = GradedComplex::new(fam.ranks.clone(), fam.v[j].clone(), geo.mid)?;
        Ok(c(half_supertrace_heat(&cx, &geo.omega, t), 0.0))
    });
    Ok(FormOnBase { degree0: deg0, degree1: deg1.into_iter().collect::<Result<_>>()? })
}

pub fn h_form(fam: &SuperconnectionFamily, metric: &FamilyMetric) -> Result<FormOnBase> {
    h_form_at(fam, metric, 1.0)
}

/// Degree-1 part of `h(nabla^H, h_{L^2})` per edge, from the Gauss–Manin
/// transport of G-orthonormal harmonic bases.
pub fn h_harmonic(fam: &SuperconnectionFamily, metric: &FamilyMetric) -> Result<Vec<f64>> {
    fam.check_metric(metric)?;
    let m = fam.samples();
    let ds = fam.step();
    let bases: Vec<Result<Vec<CMat>>> = par::map_range(m, |j| {
        let cx = fam.fiber(j, metric)?;
        (0..fam.ranks.len()).map(|k| Ok(cx.harmonic_basis(k)?)).collect()
    });
    let bases: Vec<Vec<CMat>> = bases.into_iter().collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let jn = (j + 1) % m;
        let mut acc = 0.0;
        for k in 0..fam.ranks.len() {
            let b = &bases[j][k];
            if b.ncols() == 0 {
                continue;
            }
            let bn = &bases[jn][k];
            let g = &metric[jn][k];
            let moved = &fam.transport[j][k] * b;
            let projected = bn * (bn.adjoint() * g * moved);
            let gram = projected.adjoint() * g * &projected;
            acc += sgn(k) * linalg::log_abs_det(&gram);
        }
        out.push(0.5 * acc / ds);
    }
    Ok(out)
}

/// Degree-0 transgression `int_0^1 (1/2) Tr_s[h_l^{-1} dh_l/dl h'(X_{t,l})] dl`
/// along a metric path, by Gauss–Legendre in `l` with a centred difference for
/// the `l`-derivative. The degree-1 part vanishes by parity.
pub fn transgression_at(
    fam: &SuperconnectionFamily,
    path: impl Fn(f64) -> FamilyMetric + Sync,
    nodes: usize,
    t: f64,
) -> Result<FormOnBase> {
    if nodes < 16 {
        return Err(FormError::TooFewNodes { min: 16, got: nodes });
    }
    let m = fam.samples();
    let (ls, ws) = quadrature::gauss_legendre(nodes, 0.0, 1.0);
    let eps = 1e-5;
    let per_node: Vec<Result<Vec<f64>>> = par::map(&ls, |&l| {
        let g = path(l);
        let gp = path(l + eps);
        let gm = path(l - eps);
        fam.check_metric(&g)?;
        let mut vals = Vec::with_capacity(m);
        for j in 0..m {
            let cx = GradedComplex::new(fam.ranks.clone(), fam.v[j].clone(), g[j].clone()).map_err(|e| match e {
                ComplexError::InvalidMetric { .. } => FormError::NonPositivePath { l, sample: j },
                other => FormError::Complex(other),
            })?;
            let omega: Vec<CMat> = (0..fam.ranks.len())
                .map(|k| {
                    let dg = (&gp[j][k] - &gm[j][k]) * c(0.5 / eps, 0.0);
                    linalg::inverse(&g[j][k]).expect("validated metric") * dg
                })
                .collect();
            vals.push(half_supertrace_heat(&cx, &omega, t));
        }
        Ok(vals)
    });
    let mut deg0 = vec![c(0.0, 0.0); m];
    for (vals, w) in per_node.into_iter().zip(&ws) {
        for (acc, v) in deg0.iter_mut().zip(vals?) {
            *acc += c(w * v, 0.0);
        }
    }
    Ok(FormOnBase { degree0: deg0, degree1: vec![c(0.0, 0.0); m] })
}

pub fn transgression(
    fam: &SuperconnectionFamily,
    path: impl Fn(f64) -> FamilyMetric + Sync,
    nodes: usize,
) -> Result<FormOnBase> {
    transgression_at(fam, path, nodes, 1.0)
}

/// Quadrature settings for `T^L_tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsionQuadrature {
    pub tau: f64,
    pub t_max: f64,
    pub nodes: usize,
}

impl TorsionQuadrature {
    pub fn new(tau: f64, t_max: f64) -> Self {
        TorsionQuadrature { tau, t_max, nodes: 200 }
    }
}

/// Degree-0 value of the torsion form at one fibre.
pub fn torsion_tau_point(cx: &GradedComplex, q: &TorsionQuadrature) -> std::result::Result<(f64, f64), ComplexError> {
    let spectra = cx.spectra()?;
    let chi_e = cx.euler().chi_prime as f64;
    let betti: Vec<usize> = spectra.iter().map(|s| s.kernel_dim).collect();
    let chi_h = EulerData::from_ranks(&betti).chi_prime as f64;
    let integrand = |t: f64| {
        let mut acc = 0.0;
        for (k, s) in spectra.iter().enumerate() {
            let part: f64 = s.nonzero().iter().map(|&l| h_prime_heat(t * l)).sum();
            acc += sgn(k) * k as f64 * part;
        }
        0.5 * acc - 0.5 * (chi_e - chi_h) * h_prime_heat(t)
    };
    let nodes = quadrature::log_space(q.tau, q.t_max, q.nodes);
    let vals: Vec<f64> = nodes.iter().map(|&t| integrand(t)).collect();
    let tail = vals.last().copied().unwrap_or(0.0);
    Ok((-quadrature::trapezoid_log(&nodes, &vals), tail))
}

/// `T^L_tau`: degree 0 per sample; degree 1 vanishes by parity on a circle base.
pub fn torsion_form_tl(fam: &SuperconnectionFamily, metric: &FamilyMetric, q: &TorsionQuadrature) -> Result<FormOnBase> {
    if !(q.tau > 0.0 && q.tau < q.t_max) {
        return Err(FormError::InvalidTau { tau: q.tau, t_max: q.t_max });
    }
    if q.nodes < 2 {
        return Err(FormError::TooFewNodes { min: 2, got: q.nodes });
    }
    fam.check_metric(metric)?;
    let m = fam.samples();
    let vals: Vec<Result<f64>> = par::map_range(m, |j| {
        let cx = fam.fiber(j, metric)?;
        let (v, tail) = torsion_tau_point(&cx, q)?;
        if tail.abs() > 1e-6 {
            return Err(FormError::TailNotConverged { sample: j, value: tail, t_max: q.t_max });
        }
        Ok(v)
    });
    let deg0 = vals.into_iter().map(|v| v.map(|x| c(x, 0.0))).collect::<Result<Vec<_>>>()?;
    Ok(FormOnBase { degree0: deg0, degree1: vec![c(0.0, 0.0); m] })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnomalyReport {
    /// `(T_{j+1} - T_j) / ds - [h(A, h_tau) - h(nabla^H)]` per edge.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub d_torsion: Vec<f64>,
    pub h_a: Vec<f64>,
    pub h_harmonic: Vec<f64>,
}

pub fn anomaly_check(fam: &SuperconnectionFamily, metric: &FamilyMetric, q: &TorsionQuadrature) -> Result<AnomalyReport> {
    let tl = torsion_form_tl(fam, metric, q)?;
    let dt: Vec<f64> = tl.d_base().iter().map(|z| z.re).collect();
    let ha: Vec<f64> = h_form_at(fam, metric, q.tau)?.degree1.iter().map(|z| z.re).collect();
    let hh = h_harmonic(fam, metric)?;
    let residuals: Vec<f64> = (0..fam.samples()).map(|j| dt[j] - (ha[j] - hh[j])).collect();
    let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(AnomalyReport { residuals, max_residual, d_torsion: dt, h_a: ha, h_harmonic: hh })
}

/// Parameters of the rank-(2,2,1) test family with diagonal unitary holonomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyFamilySpec {
    pub m: usize,
    pub a: f64,
    pub b: f64,
    /// Holonomy phases (alpha, beta, gamma).
    pub phases: [f64; 3],
    /// Amplitude of the periodic metric modulation.
    pub amplitude: f64,
    /// Apply a random periodic gauge to every sample.
    pub gauge: bool,
    pub seed: u64,
}

impl Default for HolonomyFamilySpec {
    fn default() -> Self {
        HolonomyFamilySpec { m: 64, a: 1.3, b: 0.8, phases: [0.7, 1.9, -1.1], amplitude: 0.3, gauge: true, seed: 7 }
    }
}

/// Builds the rank-(2,2,1) family `(d_0, d_1) = ([[0,a],[0,0]], [0,b])`, conjugated
/// by a fixed block unitary, with holonomy `diag(e^{i alpha}, e^{i beta}) +
/// diag(e^{i beta}, e^{i gamma}) + e^{i gamma}` concentrated on the closing edge,
/// and a smooth metric compatible with that holonomy.
pub fn holonomy_family(spec: &HolonomyFamilySpec) -> Result<(SuperconnectionFamily, FamilyMetric)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let ranks = vec![2, 2, 1];
    let [al, be, ga] = spec.phases;
    let d0 = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(spec.a, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let d1 = CMat::from_row_slice(1, 2, &[c(0.0, 0.0), c(spec.b, 0.0)]);
    let phase_sets: [Vec<f64>; 3] = [vec![al, be], vec![be, ga], vec![ga]];
    let w: Vec<CMat> = ranks.iter().map(|&r| linalg::random_unitary(&mut rng, r)).collect();
    let conj = |k: usize, mtx: &CMat| &w[k] * mtx * w[k].adjoint();
    let v_ref = vec![&w[1] * &d0 * w[0].adjoint(), &w[2] * &d1 * w[1].adjoint()];
    // Q(s) = exp(s L / 2pi) in the W frame.
    let q_of = |k: usize, s: f64| -> CMat {
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            phase_sets[k].len(),
            phase_sets[k].iter().map(|&p| c(0.0, p * s / (2.0 * PI)).exp()),
        ));
        conj(k, &diag)
    };
    // Periodic HPD modulation K(s) = B_0 + amp (cos s B_1 + sin 2s B_2).
    let kb: Vec<[CMat; 3]> = ranks
        .iter()
        .map(|&r| {
            [
                linalg::random_hpd(&mut rng, r, 1.0, 0.5),
                linalg::hermitian_part(&linalg::random_matrix(&mut rng, r, r)),
                linalg::hermitian_part(&linalg::random_matrix(&mut rng, r, r)),
            ]
        })
        .collect();
    let m = spec.m;
    let ds = 2.0 * PI / m as f64;
    let mut metric: FamilyMetric = Vec::with_capacity(m);
    for j in 0..m {
        let s = j as f64 * ds;
        let per: Vec<CMat> = (0..3)
            .map(|k| {
                let kk = &kb[k][0] + (&kb[k][1] * c(s.cos(), 0.0) + &kb[k][2] * c((2.0 * s).sin(), 0.0)) * c(spec.amplitude, 0.0);
                let q = q_of(k, s);
                linalg::hermitian_part(&(q.adjoint() * kk * q))
            })
            .collect();
        metric.push(per);
    }
    let mut v: Vec<Vec<CMat>> = vec![v_ref.clone(); m];
    let ident: Vec<CMat> = ranks.iter().map(|&r| linalg::eye(r)).collect();
    let mut transport: Vec<Vec<CMat>> = vec![ident; m];
    transport[m - 1] = (0..3).map(|k| q_of(k, 2.0 * PI)).collect();
    if spec.gauge {
        let gauges: Vec<Vec<CMat>> = (0..m)
            .map(|_| {
                ranks
                    .iter()
                    .map(|&r| linalg::eye(r) + linalg::random_matrix(&mut rng, r, r) * c(0.2, 0.0))
                    .collect()
            })
            .collect();
        for j in 0..m {
            let jn = (j + 1) % m;
            for k in 0..3 {
                let gi = linalg::inverse(&gauges[j][k]).expect("near-identity gauge");
                transport[j][k] = &gauges[jn][k] * &transport[j][k] * &gi;
                metric[j][k] = linalg::hermitian_part(&(gi.adjoint() * &metric[j][k] * &gi));
            }
            for k in 0..2 {
                let gi = linalg::inverse(&gauges[j][k]).expect("near-identity gauge");
                v[j][k] = &gauges[j][k + 1] * &v[j][k] * gi;
            }
        }
    }
    Ok((SuperconnectionFamily::new(ranks, v, transport)?, metric))
}

/// Cellular cochain complex of a circle cut into `nodes` equal edges, with a
/// flat unitary line bundle per entry of `twists` (holonomy `e^{2 pi i a}`
/// picked up on the closing edge). Metrics are the lumped `L^2` ones:
/// `h` on vertices and `1/h` on edges.
pub fn circle_cochains(nodes: usize, length: f64, twists: &[f64]) -> (Vec<usize>, Vec<CMat>, Vec<CMat>) {
    let r = twists.len();
    let n = nodes * r;
    let mut d = CMat::zeros(n, n);
    for (i, &a) in twists.iter().enumerate() {
        let o = i * nodes;
        let hol = c(0.0, 2.0 * PI * a).exp();
        for e in 0..nodes {
            let next = (e + 1) % nodes;
            let w = if next == 0 { hol } else { c(1.0, 0.0) };
            d[(o + e, o + next)] += w;
            d[(o + e, o + e)] -= c(1.0, 0.0);
        }
    }
    let h = length / nodes as f64;
    (vec![n, n], vec![d], vec![linalg::eye(n) * c(h, 0.0), linalg::eye(n) * c(1.0 / h, 0.0)])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrrReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub torsion: Vec<f64>,
    pub h_harmonic: Vec<f64>,
}

/// Residual of `d T + h(nabla^H)` for the trivial family of circles of length
/// `length(s)` with a flat unitary bundle of twists `twists` along the fibre.
/// Fibre torsion comes from the zeta-regularised determinant; the harmonic term
/// from the cellular fibre complex with `fiber_nodes` edges.
pub fn grr_residual(m: usize, twists: &[f64], length: impl Fn(f64) -> f64, fiber_nodes: usize) -> Result<GrrReport> {
    if m < 8 {
        return Err(FormError::TooFewSamples(m));
    }
    let ds = 2.0 * PI / m as f64;
    let lengths: Vec<f64> = (0..m).map(|j| length(j as f64 * ds)).collect();
    let (ranks, v, _) = circle_cochains(fiber_nodes, 1.0, twists);
    let fam = SuperconnectionFamily::constant(ranks, v, m)?;
    let metric: FamilyMetric = lengths.iter().map(|&l| circle_cochains(fiber_nodes, l, twists).2).collect();
    let hh = h_harmonic(&fam, &metric)?;
    let torsion: Vec<f64> = lengths
        .iter()
        .map(|&l| twists.iter().map(|&a| crate::zeta::circle_torsion(a, l)).sum())
        .collect();
    let residuals: Vec<f64> = (0..m).map(|j| (torsion[(j + 1) % m] - torsion[j]) / ds + hh[j]).collect();
    let max_residual = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(GrrReport { residuals, max_residual, torsion, h_harmonic: hh })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn acyclic_pair(m: usize) -> SuperconnectionFamily {
        SuperconnectionFamily::constant(vec![1, 1], vec![CMat::from_element(1, 1, c(2.0, 0.0))], m).unwrap()
    }

    #[test]
    fn rejects_small_bases_and_nonflat_transport() {
        assert!(matches!(
            SuperconnectionFamily::constant(vec![1], vec![], 4),
            Err(FormError::TooFewSamples(4))
        ));
        let v = vec![vec![CMat::from_element(1, 1, c(1.0, 0.0))]; 8];
        let mut p = vec![vec![linalg::eye(1), linalg::eye(1)]; 8];
        p[3][1] = CMat::from_element(1, 1, c(2.0, 0.0));
        assert!(matches!(
            SuperconnectionFamily::new(vec![1, 1], v, p),
            Err(FormError::NotFlat { edge: 3, .. })
        ));
    }

    #[test]
    fn unitary_adjoint_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = linalg::random_unitary(&mut rng, 2);
        let v = vec![vec![CMat::zeros(2, 2)]; 8];
        let p = vec![vec![u.clone(), u.clone()]; 8];
        let fam = SuperconnectionFamily::new(vec![2, 2], v, p).unwrap();
        let adj = adjoint_superconnection(&fam, &fam.identity_metric()).unwrap();
        assert!(linalg::frob(&(&adj.transport[0][0] - &u)) < 1e-12);
    }

    #[test]
    fn constant_x0_is_half_difference() {
        let fam = acyclic_pair(8);
        let adj = adjoint_superconnection(&fam, &fam.identity_metric()).unwrap();
        let x = &adj.x0[0];
        assert!((x[(1, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((x[(0, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn h_form_of_trivial_family_vanishes() {
        let fam = acyclic_pair(8);
        let h = h_form(&fam, &fam.identity_metric()).unwrap();
        for z in h.degree0.iter().chain(&h.degree1) {
            assert!(z.norm() < 1e-14);
        }
    }

    #[test]
    fn scaling_transgression_equals_euler_characteristic() {
        let fam = SuperconnectionFamily::constant(vec![2, 1], vec![CMat::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.5, 0.0)])], 8)
            .unwrap();
        let base = fam.identity_metric();
        let path = |l: f64| -> FamilyMetric {
            base.iter().map(|gs| gs.iter().map(|g| g * c((2.0 * l).exp(), 0.0)).collect()).collect()
        };
        let tr = transgression(&fam, path, 16).unwrap();
        for z in &tr.degree0 {
            assert!((z.re - 1.0).abs() < 1e-8, "{z}");
        }
    }

    #[test]
    fn point_torsion_converges_to_finite_torsion() {
        let fam = acyclic_pair(8);
        let g = fam.identity_metric();
        let exact = fam.fiber(0, &g).unwrap().finite_torsion().unwrap();
        let mut q = TorsionQuadrature::new(1e-3, 200.0);
        q.nodes = 400;
        let a = torsion_form_tl(&fam, &g, &q).unwrap().degree0[0].re;
        q.tau = 5e-4;
        let b = torsion_form_tl(&fam, &g, &q).unwrap().degree0[0].re;
        let extrapolated = 2.0 * b - a;
        assert!((extrapolated - exact).abs() < 1e-4, "{extrapolated} vs {exact}");
    }

    #[test]
    fn grr_untwisted_and_twisted() {
        let r = grr_residual(64, &[0.0, 0.3], |s| 2.0 + 0.5 * s.sin(), 16).unwrap();
        assert!(r.max_residual < 1e-3, "{}", r.max_residual);
        let constant = grr_residual(16, &[0.3], |_| 2.0, 16).unwrap();
        assert!(constant.max_residual < 1e-12);
    }

    #[test]
    fn short_t_max_is_reported() {
        let fam = acyclic_pair(8);
        let q = TorsionQuadrature::new(1e-3, 1.0);
        assert!(matches!(
            torsion_form_tl(&fam, &fam.identity_metric(), &q),
            Err(FormError::TailNotConverged { .. })
        ));
    }
}
