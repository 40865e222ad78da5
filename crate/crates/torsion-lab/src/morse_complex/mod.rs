//! Thom-Smale complexes of Morse functions on the circle and the flat
//! 2-torus, with coefficients in a flat unitary bundle.
//!
//! Points live in the periodic chart `[0, 2 pi)^d`. The bundle is described
//! by one commuting unitary per coordinate direction: moving a point from the
//! cell `floor(x / 2 pi) = n` to the cell `n + 1` multiplies fibre vectors by
//! that unitary. Parallel transport along a lifted path is therefore
//! `U_x^{w_x} U_y^{w_y}`, where `w` counts cell changes.

pub mod cheeger_muller;
pub mod flow_lines;
pub mod suspension;

use crate::graded_complex::{ComplexError, GradedComplex};
use crate::linalg::{self, CMat};
use crate::par;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

pub use flow_lines::{flow_lines, FlowLine};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error("degenerate critical point at {location:?} (Hessian eigenvalues {eigenvalues:?})")]
    Degenerate { location: Vec<f64>, eigenvalues: Vec<f64> },
    #[error("holonomy {generator} is not unitary (defect {defect:e})")]
    NotUnitary { generator: usize, defect: f64 },
    #[error("holonomies do not commute (defect {0:e})")]
    NonCommuting(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("flow line from critical point {from} ends at critical point {landed} of index {landed_index}; the pair ({from}, {to}) is not transversal")]
    NonTransversal { from: usize, to: usize, landed: usize, landed_index: usize },
    #[error("flow integration from critical point {from} failed: {reason}")]
    FlowFailed { from: usize, reason: String },
    #[error("d^2 != 0 on the triple ({top}, {middle:?}, {bottom}): defect {defect:e}")]
    NotAComplex { top: usize, middle: Option<usize>, bottom: usize, defect: f64 },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("suspension dimension N = {0} must be even and at least 2")]
    OddSuspension(usize),
    #[error("holonomy angle {0} is a multiple of 2 pi; the twisted circle is not acyclic")]
    NotAcyclic(f64),
    #[error("spectral solver: {0}")]
    Spectral(String),
}

pub type Result<T> = std::result::Result<T, MorseError>;

/// Real trigonometric polynomial `sum_k a_k cos(k s) + b_k sin(k s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    /// `(k, a_k, b_k)` triples.
    pub terms: Vec<(u32, f64, f64)>,
}

impl TrigSeries {
    pub fn cosine(k: u32) -> Self {
        TrigSeries { terms: vec![(k, 1.0, 0.0)] }
    }

    /// Value, first and second derivative at `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for &(k, a, b) in &self.terms {
            let kf = k as f64;
            let (sn, cs) = (kf * s).sin_cos();
            out[0] += a * cs + b * sn;
            out[1] += kf * (b * cs - a * sn);
            out[2] -= kf * kf * (a * cs + b * sn);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Circle,
    Torus,
}

/// A Morse function on the circle or on the torus (as a sum of one-variable
/// series) with a flat unitary representation of rank `m`.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    kind: ManifoldKind,
    series: Vec<TrigSeries>,
    holonomy: Vec<CMat>,
}

const UNITARY_TOL: f64 = 1e-12;

fn unitary_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - linalg::eye(n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl ManifoldModel {
    pub fn circle(f: TrigSeries, holonomy: CMat) -> Result<Self> {
        Self::build(ManifoldKind::Circle, vec![f], vec![holonomy])
    }

    /// `f(x, y) = fx(x) + fy(y)` with commuting holonomies along `x` and `y`.
    pub fn torus(fx: TrigSeries, fy: TrigSeries, hx: CMat, hy: CMat) -> Result<Self> {
        Self::build(ManifoldKind::Torus, vec![fx, fy], vec![hx, hy])
    }

    /// Circle with `f = cos s` and the rank-one holonomy `e^{i theta}`.
    pub fn twisted_circle(theta: f64) -> Result<Self> {
        Self::circle(TrigSeries::cosine(1), CMat::from_element(1, 1, linalg::c(0.0, theta).exp()))
    }

    fn build(kind: ManifoldKind, series: Vec<TrigSeries>, holonomy: Vec<CMat>) -> Result<Self> {
        let m = holonomy[0].nrows();
        for (g, u) in holonomy.iter().enumerate() {
            if u.nrows() != m || u.ncols() != m || m == 0 {
                return Err(MorseError::InvalidModel(format!("holonomy {g} must be a nonempty {m}x{m} matrix")));
            }
            let defect = unitary_defect(u);
            if defect > UNITARY_TOL {
                return Err(MorseError::NotUnitary { generator: g, defect });
            }
        }
        if holonomy.len() == 2 {
            let defect = (&holonomy[0] * &holonomy[1] - &holonomy[1] * &holonomy[0])
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if defect > UNITARY_TOL {
                return Err(MorseError::NonCommuting(defect));
            }
        }
        if series.iter().all(|s| s.terms.iter().all(|&(k, a, b)| k == 0 || (a == 0.0 && b == 0.0))) {
            return Err(MorseError::InvalidModel("the Morse function is constant".into()));
        }
        Ok(ManifoldModel { kind, series, holonomy })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.series.len()
    }

    /// Rank of the flat bundle.
    pub fn rank(&self) -> usize {
        self.holonomy[0].nrows()
    }

    pub fn holonomy(&self) -> &[CMat] {
        &self.holonomy
    }

    /// The same model with every holonomy conjugated by the unitary `w`.
    pub fn regauged(&self, w: &CMat) -> Result<Self> {
        let hol = self.holonomy.iter().map(|u| w * u * w.adjoint()).collect();
        Self::build(self.kind, self.series.clone(), hol)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.series.iter().zip(x).map(|(s, &xi)| s.eval(xi)[0]).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.series.iter().zip(x).map(|(s, &xi)| s.eval(xi)[1]))
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(self.dim(), self.series.iter().zip(x).map(|(s, &xi)| s.eval(xi)[2])))
    }

    /// Parallel transport across `w[j]` cell changes along axis `j`.
    pub fn transport(&self, winding: &[i64]) -> CMat {
        let mut out = linalg::eye(self.rank());
        for (u, &w) in self.holonomy.iter().zip(winding) {
            let step = if w >= 0 { u.clone() } else { u.adjoint() };
            for _ in 0..w.unsigned_abs() {
                out = &step * out;
            }
        }
        out
    }

    fn seeds(&self) -> Vec<Vec<f64>> {
        match self.kind {
            ManifoldKind::Circle => (0..256).map(|j| vec![TAU * (j as f64 + 0.5) / 256.0]).collect(),
            ManifoldKind::Torus => (0..64 * 64)
                .map(|j| vec![TAU * ((j / 64) as f64 + 0.5) / 64.0, TAU * ((j % 64) as f64 + 0.5) / 64.0])
                .collect(),
        }
    }
}

/// Reduces every coordinate to `[0, 2 pi)`.
pub fn canonical(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let r = v.rem_euclid(TAU);
            if r >= TAU - 1e-14 {
                0.0
            } else {
                r
            }
        })
        .collect()
}

/// Distance on the flat torus `(R / 2 pi Z)^d`.
pub fn periodic_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(TAU);
            d.min(TAU - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critical {
    /// Canonical chart coordinates in `[0, 2 pi)^d`.
    pub location: Vec<f64>,
    pub value: f64,
    pub index: usize,
    pub hessian_eigenvalues: Vec<f64>,
    /// Chosen oriented basis of the unstable tangent space.
    pub unstable: Vec<Vec<f64>>,
    /// Unit stable directions.
    pub stable: Vec<Vec<f64>>,
}

const NEWTON_TOL: f64 = 1e-13;
const DEDUP: f64 = 1e-6;

fn newton(model: &ManifoldModel, start: &[f64]) -> Option<Vec<f64>> {
    let mut x = DVector::from_column_slice(start);
    // Besides a small gradient, a tiny step is required: near a degenerate
    // point convergence is only linear and stopping on the gradient alone
    // would leave a Hessian that looks nondegenerate.
    for _ in 0..200 {
        let g = model.gradient(x.as_slice());
        if g.norm() == 0.0 {
            return Some(canonical(x.as_slice()));
        }
        let step = model.hessian(x.as_slice()).lu().solve(&g)?;
        if g.norm() < NEWTON_TOL && step.amax() < 1e-14 {
            return Some(canonical(x.as_slice()));
        }
        // Keep steps inside one cell so that seeds stay local.
        let scale = (0.5 / step.amax().max(1e-300)).min(1.0);
        x -= step * scale;
    }
    None
}

/// Sign-normalised vector: the largest component is positive.
fn orient(v: Vec<f64>) -> Vec<f64> {
    let k = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
    if v[k] < 0.0 {
        v.into_iter().map(|x| -x).collect()
    } else {
        v
    }
}

/// Every critical point, found by Newton from the seed net and sorted by
/// `(index, location)`.
pub fn fiber_criticals(model: &ManifoldModel) -> Result<Vec<Critical>> {
    let seeds = model.seeds();
    let found: Vec<Option<Vec<f64>>> = par::map(&seeds, |s| newton(model, s));
    let mut points: Vec<Vec<f64>> = Vec::new();
    for x in found.into_iter().flatten() {
        if !points.iter().any(|p| periodic_distance(p, &x) < DEDUP) {
            points.push(x);
        }
    }
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        let h = model.hessian(&x);
        let eig = SymmetricEigen::new(h);
        let scale = eig.eigenvalues.iter().fold(1.0f64, |a, l| a.max(l.abs()));
        let mut order: Vec<usize> = (0..model.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if values.iter().any(|l| l.abs() < 1e-8 * scale) {
            return Err(MorseError::Degenerate { location: x, eigenvalues: values });
        }
        let column = |k: usize| orient(eig.eigenvectors.column(k).iter().cloned().collect());
        let unstable = order.iter().filter(|&&k| eig.eigenvalues[k] < 0.0).map(|&k| column(k)).collect::<Vec<_>>();
        let stable = order.iter().filter(|&&k| eig.eigenvalues[k] > 0.0).map(|&k| column(k)).collect();
        out.push(Critical { value: model.value(&x), index: unstable.len(), location: x, hessian_eigenvalues: values, unstable, stable });
    }
    out.sort_by(|a, b| a.index.cmp(&b.index).then_with(|| {
        a.location.iter().zip(&b.location).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    }));
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MorseComplexData {
    pub criticals: Vec<Critical>,
    pub flows: Vec<FlowLine>,
    /// Position of each critical point inside its degree.
    pub slot: Vec<usize>,
    pub complex: GradedComplex,
}

impl MorseComplexData {
    /// Number of critical points of each index.
    pub fn counts(&self) -> Vec<usize> {
        let top = self.criticals.iter().map(|c| c.index).max().unwrap_or(0);
        (0..=top).map(|k| self.criticals.iter().filter(|c| c.index == k).count()).collect()
    }
}

/// Assembles the cochain complex `V^k = sum_{index p = k} F_p`. The block
/// from `q` (index `k`) to `p` (index `k + 1`) is `sum_gamma n_gamma tau_gamma^*`,
/// where `tau_gamma : F_p -> F_q` is transport along the flow line.
pub fn build_complex(model: &ManifoldModel) -> Result<MorseComplexData> {
    let criticals = fiber_criticals(model)?;
    let flows = flow_lines::all_flow_lines(model, &criticals)?;
    let m = model.rank();
    let top = model.dim();
    let mut slot = vec![0; criticals.len()];
    let mut counts = vec![0usize; top + 1];
    for (j, c) in criticals.iter().enumerate() {
        slot[j] = counts[c.index];
        counts[c.index] += 1;
    }
    let ranks: Vec<usize> = counts.iter().map(|n| n * m).collect();
    let mut diffs: Vec<CMat> = (0..top).map(|k| linalg::zeros(ranks[k + 1], ranks[k])).collect();
    for fl in &flows {
        let k = criticals[fl.to].index;
        let (r, c0) = (slot[fl.from] * m, slot[fl.to] * m);
        let block = fl.transport.adjoint() * linalg::c(fl.sign as f64, 0.0);
        let mut view = diffs[k].view_mut((r, c0), (m, m));
        view += block;
    }
    check_square_zero(&criticals, &slot, &diffs, m)?;
    let complex = GradedComplex::standard(ranks, diffs)?;
    Ok(MorseComplexData { criticals, flows, slot, complex })
}

fn check_square_zero(criticals: &[Critical], slot: &[usize], diffs: &[CMat], m: usize) -> Result<()> {
    for k in 0..diffs.len().saturating_sub(1) {
        let prod = &diffs[k + 1] * &diffs[k];
        for (pi, _) in criticals.iter().enumerate().filter(|(_, c)| c.index == k + 2) {
            for (ri, _) in criticals.iter().enumerate().filter(|(_, c)| c.index == k) {
                let block = prod.view((slot[pi] * m, slot[ri] * m), (m, m));
                let defect = block.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if defect > 1e-9 {
                    let middle = criticals.iter().position(|c| c.index == k + 1);
                    return Err(MorseError::NotAComplex { top: pi, middle, bottom: ri, defect });
                }
            }
        }
    }
    Ok(())
}

/// Closed form `-log |1 - e^{i theta}|` of the twisted-circle torsion.
pub fn twisted_circle_torsion(theta: f64) -> f64 {
    -(2.0 * (0.5 * theta).sin().abs()).ln()
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_series_derivatives() {
        let s = TrigSeries { terms: vec![(1, 0.3, -1.2), (3, 0.5, 0.25)] };
        let h = 1e-5;
        for x in [0.1, 1.3, 4.0] {
            let [_, d1, d2] = s.eval(x);
            let fd1 = (s.eval(x + h)[0] - s.eval(x - h)[0]) / (2.0 * h);
            let fd2 = (s.eval(x + h)[1] - s.eval(x - h)[1]) / (2.0 * h);
            assert!((fd1 - d1).abs() < 1e-9 && (fd2 - d2).abs() < 1e-8);
        }
    }

    #[test]
    fn circle_and_torus_censuses() {
        let one = linalg::eye(1);
        let circ = ManifoldModel::circle(TrigSeries::cosine(1), one.clone()).unwrap();
        let idx: Vec<usize> = fiber_criticals(&circ).unwrap().iter().map(|c| c.index).collect();
        assert_eq!(idx, vec![0, 1]);
        let circ2 = ManifoldModel::circle(TrigSeries::cosine(2), one.clone()).unwrap();
        let idx: Vec<usize> = fiber_criticals(&circ2).unwrap().iter().map(|c| c.index).collect();
        assert_eq!(idx, vec![0, 0, 1, 1]);
        let torus = ManifoldModel::torus(TrigSeries::cosine(1), TrigSeries::cosine(1), one.clone(), one).unwrap();
        let idx: Vec<usize> = fiber_criticals(&torus).unwrap().iter().map(|c| c.index).collect();
        assert_eq!(idx, vec![0, 1, 1, 2]);
    }

    #[test]
    fn rejects_bad_holonomy() {
        let bad = CMat::from_element(1, 1, linalg::c(1.1, 0.0));
        assert!(matches!(ManifoldModel::circle(TrigSeries::cosine(1), bad), Err(MorseError::NotUnitary { .. })));
        let a = CMat::from_row_slice(2, 2, &[linalg::c(0.0, 0.0), linalg::c(1.0, 0.0), linalg::c(1.0, 0.0), linalg::c(0.0, 0.0)]);
        let b = CMat::from_row_slice(2, 2, &[linalg::c(1.0, 0.0), linalg::c(0.0, 0.0), linalg::c(0.0, 0.0), linalg::c(-1.0, 0.0)]);
        assert!(matches!(
            ManifoldModel::torus(TrigSeries::cosine(1), TrigSeries::cosine(1), a, b),
            Err(MorseError::NonCommuting(_))
        ));
    }

    #[test]
    fn degenerate_function_rejected() {
        // sin s - sin(2s)/2 has f' = f'' = 0 at s = 0.
        let f = TrigSeries { terms: vec![(1, 0.0, 1.0), (2, 0.0, -0.5)] };
        assert!(matches!(fiber_criticals(&ManifoldModel::circle(f, linalg::eye(1)).unwrap()), Err(MorseError::Degenerate { .. })));
    }
}
