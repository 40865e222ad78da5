//! Explicit model functions near a birth-death singularity and numerical
//! verification of their critical-point census.
//!
//! Coordinates are `u = (u_0, ..., u_n)`. The base function is
//! `f_y = u_0^3 - y u_0 - |(u_1..u_i)|^2 + |(u_{i+1}..u_n)|^2`; the model adds
//! `-eta(|u|) u_1 + y eta_tilde(|u|) u_0 + q_A(|u|)`.

pub mod census;
pub mod probes;
pub mod profiles;

use nalgebra::{DMatrix, DVector};
use profiles::ShapingProfiles;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BirthDeathError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("infeasible profile: clause `{0}` is violated")]
    Infeasible(String),
    #[error("incomplete census: Newton failed from every seed in shell {0}")]
    IncompleteCensus(String),
    #[error("unexpected census: {0}")]
    UnexpectedCensus(String),
    #[error("integration failed: {0}")]
    Integration(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub i: usize,
    pub r1: f64,
    pub r2: f64,
    pub delta: f64,
    pub y: f64,
    pub amplitude: f64,
}

impl ModelParams {
    pub fn new(n: usize, i: usize, r1: f64, r2: f64, delta: f64, y: f64, amplitude: f64) -> Result<Self, BirthDeathError> {
        let bad = |m: String| Err(BirthDeathError::InvalidParams(m));
        if !(2..n).contains(&i) {
            return bad(format!("index parameter i = {i} must lie in 2..=n-1 with n = {n}"));
        }
        if !(0.0 < r1 && r1 < r2 && r2 < 1.0 / 14.0) {
            return bad(format!("radii must satisfy 0 < r1 < r2 < 1/14, got r1 = {r1}, r2 = {r2}"));
        }
        if !(delta > 0.0 && delta < r1 / 24.0) {
            return bad(format!("delta must lie in (0, r1/24), got {delta}"));
        }
        if !(y.abs() < delta * delta) {
            return bad(format!("|y| must be below delta^2 = {:e}, got {y:e}", delta * delta));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return bad(format!("amplitude must be >= 0, got {amplitude}"));
        }
        Ok(ModelParams { n, i, r1, r2, delta, y, amplitude })
    }

    /// The census configuration: `n = 6, i = 3, r1 = 0.04, r2 = 0.06,
    /// delta = 0.0015, A = 1000`.
    pub fn census_default(y: f64) -> Self {
        ModelParams::new(6, 3, 0.04, 0.06, 0.0015, y, 1000.0).expect("census defaults are valid")
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn with_y(&self, y: f64) -> Result<Self, BirthDeathError> {
        ModelParams::new(self.n, self.i, self.r1, self.r2, self.delta, y, self.amplitude)
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self, BirthDeathError> {
        ModelParams::new(self.n, self.i, self.r1, self.r2, self.delta, self.y, amplitude)
    }
}

/// Which terms of the model are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    /// `f_y` only.
    Base,
    /// `f_y - eta u_1 + y eta_tilde u_0`.
    Shaped,
    /// `f_{A,y}`, the shaped function plus `q_A`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: ModelParams,
    pub profiles: ShapingProfiles,
    pub stage: Stage,
}

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Adds the jet of `R(|u|)` scaled by `c`.
fn add_radial(jet: &mut Jet, u: &DVector<f64>, rho: f64, r: [f64; 3], c: f64) {
    let e = u / rho;
    jet.value += c * r[0];
    jet.gradient.axpy(c * r[1], &e, 1.0);
    let outer = &e * e.transpose();
    let tangential = DMatrix::identity(u.len(), u.len()) - &outer;
    jet.hessian += (outer * r[2] + tangential * (r[1] / rho)) * c;
}

/// Adds the jet of `c R(|u|) u_k`.
fn add_radial_times_coordinate(jet: &mut Jet, u: &DVector<f64>, rho: f64, r: [f64; 3], k: usize, c: f64) {
    let uk = u[k];
    let e = u / rho;
    let grad_r = &e * r[1];
    jet.value += c * r[0] * uk;
    jet.gradient.axpy(c * uk, &grad_r, 1.0);
    jet.gradient[k] += c * r[0];
    let outer = &e * e.transpose();
    let tangential = DMatrix::identity(u.len(), u.len()) - &outer;
    jet.hessian += (outer * r[2] + tangential * (r[1] / rho)) * (c * uk);
    for j in 0..u.len() {
        jet.hessian[(j, k)] += c * grad_r[j];
        jet.hessian[(k, j)] += c * grad_r[j];
    }
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self, BirthDeathError> {
        Ok(Model { params, profiles: profiles::build_profiles(&params)?, stage: Stage::Full })
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub fn jet(&self, u: &DVector<f64>) -> Jet {
        let p = &self.params;
        let dim = p.dim();
        assert_eq!(u.len(), dim, "point has the wrong dimension");
        let y = p.y;
        let mut jet = Jet { value: 0.0, gradient: DVector::zeros(dim), hessian: DMatrix::zeros(dim, dim) };
        jet.value = u[0].powi(3) - y * u[0];
        jet.gradient[0] = 3.0 * u[0] * u[0] - y;
        jet.hessian[(0, 0)] = 6.0 * u[0];
        for k in 1..dim {
            let s = if k <= p.i { -1.0 } else { 1.0 };
            jet.value += s * u[k] * u[k];
            jet.gradient[k] = 2.0 * s * u[k];
            jet.hessian[(k, k)] = 2.0 * s;
        }
        if self.stage == Stage::Base {
            return jet;
        }
        let rho = u.norm();
        // Every profile is constant on [0, r1/6], so the origin needs no care.
        if rho > p.r1 / 6.0 {
            add_radial_times_coordinate(&mut jet, u, rho, self.profiles.eta.eval(rho), 1, -1.0);
            if y != 0.0 {
                add_radial_times_coordinate(&mut jet, u, rho, self.profiles.eta_tilde.eval(rho), 0, y);
            }
        }
        if self.stage == Stage::Full {
            if rho > p.r1 {
                add_radial(&mut jet, u, rho, self.profiles.q.eval(rho), 1.0);
            } else {
                jet.value += self.profiles.q.eval(rho)[0];
            }
        }
        jet
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        self.jet(u).value
    }

    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        self.jet(u).gradient
    }

    /// Radial derivative `u . grad f / |u|`.
    pub fn radial_derivative(&self, u: &DVector<f64>) -> f64 {
        self.gradient(u).dot(u) / u.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_guards() {
        assert!(ModelParams::new(6, 3, 0.04, 0.08, 0.0015, 0.0, 10.0).is_err());
        assert!(ModelParams::new(6, 1, 0.04, 0.06, 0.0015, 0.0, 10.0).is_err());
        assert!(ModelParams::new(6, 3, 0.04, 0.06, 0.002, 0.0, 10.0).is_err());
        assert!(ModelParams::new(6, 3, 0.04, 0.06, 0.0015, 3e-6, 10.0).is_err());
        assert!(ModelParams::new(6, 3, 0.04, 0.06, 0.0015, 1e-6, 10.0).is_ok());
    }

    #[test]
    fn origin_is_critical() {
        let m = Model::new(ModelParams::census_default(0.0)).unwrap();
        let jet = m.jet(&DVector::zeros(7));
        assert!((jet.value + 0.5 * 1000.0 * 0.02 * 0.02).abs() < 1e-15);
        assert_eq!(jet.gradient.norm(), 0.0);
    }

    #[test]
    fn base_gradient_vanishes_on_fold() {
        let y = 1e-6;
        let m = Model::new(ModelParams::census_default(y)).unwrap().with_stage(Stage::Base);
        let mut u = DVector::zeros(7);
        u[0] = (y / 3.0).sqrt();
        assert!(m.gradient(&u).norm() < 1e-20);
    }
}
