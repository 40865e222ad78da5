//! Multistart Newton census of critical points, closed-form candidates and
//! separation constants.

use super::{BirthDeathError, Model, ModelParams};
use crate::par;
use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative Hessian threshold below which an eigenvalue counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-8;
pub const DEDUP_DISTANCE: f64 = 1e-6;
pub const RANDOM_SEEDS: usize = 1000;
pub const SEED: u64 = 0x5EED;
pub const ANGLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Morse(usize),
    /// Exactly one zero Hessian eigenvalue; the payload counts the negative ones.
    BirthDeath(usize),
    /// More than one zero eigenvalue.
    Degenerate,
}

impl CriticalKind {
    pub fn label(&self) -> String {
        match self {
            CriticalKind::Morse(k) => k.to_string(),
            CriticalKind::BirthDeath(k) => format!("bd({k})"),
            CriticalKind::Degenerate => "degenerate".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub hessian_spectrum: Vec<f64>,
    pub kind: CriticalKind,
    pub newton_residual: f64,
}

impl CriticalPoint {
    pub fn radius(&self) -> f64 {
        self.location.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn index(&self) -> Option<usize> {
        match self.kind {
            CriticalKind::Morse(k) => Some(k),
            _ => None,
        }
    }
}

/// Classifies a sorted Hessian spectrum with relative threshold `tol`.
pub fn classify(spectrum: &[f64], tol: f64) -> CriticalKind {
    let scale = spectrum.iter().fold(1.0f64, |a, l| a.max(l.abs()));
    let zero = spectrum.iter().filter(|l| l.abs() < tol * scale).count();
    let negative = spectrum.iter().filter(|l| **l <= -tol * scale).count();
    match zero {
        0 => CriticalKind::Morse(negative),
        1 => CriticalKind::BirthDeath(negative),
        _ => CriticalKind::Degenerate,
    }
}

fn sorted_eigenvalues(h: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().cloned().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Damped Newton iteration on the gradient with a pseudo-inverse Hessian.
/// Returns the final point and gradient norm if it converged.
pub fn newton(model: &Model, start: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let tol = 1e-13 * (1.0 + model.params.amplitude);
    let mut u = start.clone();
    let mut jet = model.jet(&u);
    let mut gnorm = jet.gradient.norm();
    for _ in 0..400 {
        if gnorm <= tol * 1e-3 {
            break;
        }
        let eig = SymmetricEigen::new(jet.hessian.clone());
        let top = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        let mut step = DVector::zeros(u.len());
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l.abs() > 1e-14 * top {
                let v = eig.eigenvectors.column(k);
                step -= v * (v.dot(&jet.gradient) / l);
            }
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &u + &step * scale;
            let tj = model.jet(&trial);
            let tn = tj.gradient.norm();
            if tn < gnorm {
                u = trial;
                jet = tj;
                gnorm = tn;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || u.norm() > 10.0 {
            break;
        }
    }
    (gnorm <= tol).then_some((u, gnorm))
}

fn critical_point(model: &Model, u: DVector<f64>, residual: f64) -> CriticalPoint {
    let jet = model.jet(&u);
    let spectrum = sorted_eigenvalues(&jet.hessian);
    CriticalPoint {
        kind: classify(&spectrum, DEGENERACY_TOL),
        location: u.iter().cloned().collect(),
        value: jet.value,
        hessian_spectrum: spectrum,
        newton_residual: residual,
    }
}

/// Named radial shells used for seeding.
pub fn seed_shells(p: &ModelParams) -> Vec<(String, f64)> {
    let a = p.amplitude;
    let mut shells = vec![
        ("0".to_string(), 0.0),
        ("r1".to_string(), p.r1),
        ("mid".to_string(), 0.5 * (p.r1 + p.r2)),
        ("r2".to_string(), p.r2),
        ("3r2".to_string(), 3.0 * p.r2),
    ];
    if a > 2.0 + 2.0 * p.delta {
        for (name, r) in [
            ("A r1 / (A - 2 - 2 delta)", a * p.r1 / (a - 2.0 - 2.0 * p.delta)),
            ("A r1 / (A - 2 + 2 delta)", a * p.r1 / (a - 2.0 + 2.0 * p.delta)),
            ("A r2 / (A + 2 + 2 delta)", a * p.r2 / (a + 2.0 + 2.0 * p.delta)),
            ("A r2 / (A + 2 - 2 delta)", a * p.r2 / (a + 2.0 - 2.0 * p.delta)),
        ] {
            shells.push((name.to_string(), r));
        }
        // Radial balance of the cubic term against the band slope: the
        // index-shifted points sit where A |r - rho| ~ 3 rho^2.
        shells.push(("r1 + 3 r1^2 / A".to_string(), p.r1 + 3.0 * p.r1 * p.r1 / a));
        shells.push(("r2 - 3 r2^2 / A".to_string(), p.r2 - 3.0 * p.r2 * p.r2 / a));
    }
    shells
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Census {
    pub points: Vec<CriticalPoint>,
    /// Shells from which no Newton run converged.
    pub failed_shells: Vec<String>,
}

impl Census {
    pub fn labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self.points.iter().map(|p| p.kind.label()).collect();
        v.sort();
        v
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.newton_residual).fold(0.0, f64::max)
    }
}

/// Finds all critical points by multistart Newton: shells times an angular
/// net in the `(u_0, u_1)` plane, plus random seeds in the ball of radius
/// `3 r2`. Results are deduplicated and sorted by value.
pub fn find_critical_points(model: &Model) -> Census {
    let p = &model.params;
    let dim = p.dim();
    let plane_point = |r: f64, theta: f64| {
        let mut u = DVector::zeros(dim);
        u[0] = r * theta.cos();
        u[1] = r * theta.sin();
        u
    };
    let mut seeds: Vec<(usize, DVector<f64>)> = Vec::new();
    let shells = seed_shells(p);
    for (si, (_, r)) in shells.iter().enumerate() {
        let count = if *r == 0.0 { 1 } else { ANGLES };
        for k in 0..count {
            seeds.push((si, plane_point(*r, 2.0 * PI * (k as f64 + 0.5) / count as f64)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let random_shell = shells.len();
    for _ in 0..RANDOM_SEEDS {
        let dir = DVector::from_fn(dim, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let radius = 3.0 * p.r2 * rng.gen::<f64>().powf(1.0 / dim as f64);
        seeds.push((random_shell, dir.normalize() * radius));
    }
    let results = par::map(&seeds, |(shell, s)| (*shell, newton(model, s)));
    let mut converged_shells = vec![false; shells.len() + 1];
    let mut found: Vec<(DVector<f64>, f64)> = Vec::new();
    for (shell, r) in results {
        if let Some((u, res)) = r {
            converged_shells[shell] = true;
            match found.iter_mut().find(|(v, _)| (v - &u).norm() < DEDUP_DISTANCE) {
                Some(existing) => {
                    if res < existing.1 {
                        *existing = (u, res);
                    }
                }
                None => found.push((u, res)),
            }
        }
    }
    let mut points: Vec<CriticalPoint> = found.into_iter().map(|(u, r)| critical_point(model, u, r)).collect();
    points.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.location[1].total_cmp(&b.location[1])));
    let failed_shells = shells
        .iter()
        .enumerate()
        .filter(|(i, _)| !converged_shells[*i])
        .map(|(_, (name, _))| name.clone())
        .collect();
    Census { points, failed_shells }
}

/// `v_{1,+}` and `v_{2,+}` with their Hessian spectra, for `y = 0`.
pub fn closed_form_candidates(p: &ModelParams) -> [CriticalPoint; 2] {
    let (a, d, r2) = (p.amplitude, p.delta, p.r2);
    let dim = p.dim();
    let build = |u1: f64, diag: Vec<f64>| {
        let mut loc = vec![0.0; dim];
        loc[1] = u1;
        let mut spectrum = diag;
        spectrum.sort_by(f64::total_cmp);
        CriticalPoint {
            kind: classify(&spectrum, DEGENERACY_TOL),
            location: loc,
            value: f64::NAN,
            hessian_spectrum: spectrum,
            newton_residual: 0.0,
        }
    };
    let diag = |s: f64| {
        let mut v = vec![2.0 + s * d, -a - 2.0 - 2.0 * s * d];
        v.extend(std::iter::repeat(s * d).take(p.i - 1));
        v.extend(std::iter::repeat(4.0 + s * d).take(p.n - p.i));
        v
    };
    [build(a * r2 / (a + 2.0 + 2.0 * d), diag(1.0)), build(-a * r2 / (a + 2.0 - 2.0 * d), diag(-1.0))]
}

/// Expected census size and the index labels for each sign of `y`.
pub fn expected_census(p: &ModelParams) -> (usize, Vec<String>) {
    let i = p.i;
    let mut outer: Vec<String> = [0, i, i - 1, 1, i + 1, i].iter().map(|k| k.to_string()).collect();
    let count = if p.y == 0.0 {
        outer.push(format!("bd({i})"));
        7
    } else if p.y > 0.0 {
        outer.push(i.to_string());
        outer.push((i + 1).to_string());
        8
    } else {
        6
    };
    outer.sort();
    (count, outer)
}

/// Points of the census lying outside the midpoint shell, labelled by index:
/// `v_{1,+}` has index 1, `v_{2,+}` index `i`, `w_+` index `i + 1`.
pub fn outer_triple(census: &Census, p: &ModelParams) -> Option<[CriticalPoint; 3]> {
    let mid = 0.5 * (p.r1 + p.r2);
    let outer: Vec<&CriticalPoint> = census.points.iter().filter(|c| c.radius() > mid).collect();
    let pick = |k: usize| outer.iter().find(|c| c.index() == Some(k)).map(|c| (*c).clone());
    Some([pick(1)?, pick(p.i)?, pick(p.i + 1)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    /// Smallest distance between two of `v_{1,+}, v_{2,+}, w_+`.
    pub c: f64,
    /// Smallest value gap between them.
    pub c_prime: f64,
    /// Largest `|f|` over the same three points.
    pub big_c: f64,
}

pub fn separation(census: &Census, p: &ModelParams) -> Result<Separation, BirthDeathError> {
    let triple = outer_triple(census, p).ok_or_else(|| BirthDeathError::UnexpectedCensus("outer triple not found".into()))?;
    let mut c = f64::INFINITY;
    let mut c_prime = f64::INFINITY;
    for a in 0..3 {
        for b in a + 1..3 {
            let d: f64 = triple[a].location.iter().zip(&triple[b].location).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            c = c.min(d);
            c_prime = c_prime.min((triple[a].value - triple[b].value).abs());
        }
    }
    let big_c = triple.iter().map(|q| q.value.abs()).fold(0.0, f64::max);
    Ok(Separation { c, c_prime, big_c })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationReport {
    pub at_a: Separation,
    pub at_2a: Separation,
    /// Largest relative change of the three proxies.
    pub max_relative_change: f64,
}

pub fn separation_report(p: &ModelParams) -> Result<SeparationReport, BirthDeathError> {
    let s1 = separation(&find_critical_points(&Model::new(*p)?), p)?;
    let p2 = p.with_amplitude(2.0 * p.amplitude)?;
    let s2 = separation(&find_critical_points(&Model::new(p2)?), &p2)?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let max_relative_change = rel(s1.c, s2.c).max(rel(s1.c_prime, s2.c_prime)).max(rel(s1.big_c, s2.big_c));
    Ok(SeparationReport { at_a: s1, at_2a: s2, max_relative_change })
}

/// Whether the census at `p` matches the expected count and index labels.
pub fn census_matches(p: &ModelParams) -> Result<bool, BirthDeathError> {
    let census = find_critical_points(&Model::new(*p)?);
    let (count, labels) = expected_census(p);
    Ok(census.points.len() == count && census.labels() == labels)
}

/// Smallest amplitude in `[lo, hi]` (to relative precision `rtol`) at which
/// the census for `y = 0` and `y = +-delta^2/2` is complete, by bisection.
/// Assumes the census is correct at `hi`.
pub fn amplitude_threshold(p: &ModelParams, lo: f64, hi: f64, rtol: f64) -> Result<f64, BirthDeathError> {
    let ok = |a: f64| -> Result<bool, BirthDeathError> {
        let y2 = 0.5 * p.delta * p.delta;
        for y in [0.0, y2, -y2] {
            if !census_matches(&p.with_y(y)?.with_amplitude(a)?)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if !ok(hi)? {
        return Err(BirthDeathError::UnexpectedCensus(format!("census incomplete at the upper amplitude {hi}")));
    }
    if ok(lo)? {
        return Ok(lo);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > rtol * b {
        let m = (a * b).sqrt();
        if ok(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}
