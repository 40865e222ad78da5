//! Radial monotonicity on the separating annulus and gradient-flow
//! containment of unstable and stable level sets.

use super::census::CriticalPoint;
use super::{BirthDeathError, Model};
use crate::flow;
use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const C0: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCheck {
    pub inner: f64,
    pub outer: f64,
    pub min_derivative: f64,
    pub samples: usize,
}

/// Minimum of the radial derivative over `samples` points of the annulus
/// `A r1/(A - C0) <= |u| <= A r2/(A + C0)`. Returns `None` when the annulus is
/// undefined (`A <= C0`).
pub fn radial_derivative_check(model: &Model, samples: usize, seed: u64) -> Option<RadialCheck> {
    let p = &model.params;
    let a = p.amplitude;
    if a <= C0 {
        return None;
    }
    let (inner, outer) = (a * p.r1 / (a - C0), a * p.r2 / (a + C0));
    if inner >= outer {
        return None;
    }
    let dim = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<DVector<f64>> = (0..samples)
        .map(|k| {
            // Half the samples sit in the (u_0, u_1) plane, where the model's
            // structure concentrates; radii are stratified.
            let dir = if k % 2 == 0 {
                let t: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                let mut v = DVector::zeros(dim);
                v[0] = t.cos();
                v[1] = t.sin();
                v
            } else {
                DVector::from_fn(dim, |_, _| rng.gen::<f64>() * 2.0 - 1.0).normalize()
            };
            let r = inner + (outer - inner) * (k as f64 + rng.gen::<f64>()) / samples as f64;
            dir * r
        })
        .collect();
    let min_derivative = crate::par::map(&points, |u| model.radial_derivative(u)).into_iter().fold(f64::INFINITY, f64::min);
    Some(RadialCheck { inner, outer, min_derivative, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    Unstable,
    Stable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub manifold: Manifold,
    pub level: f64,
    pub trajectories: usize,
    /// Crossings of the level set outside the ball of radius `r2`.
    pub crossings: usize,
    pub diverged: usize,
    /// Bounding box of the crossings outside `r2`, per coordinate.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Largest `u_0` (unstable) or smallest `u_0` (stable) at a crossing.
    pub u0_extreme: f64,
    /// Largest norm of the coordinates that the flow expands away from:
    /// `u^+` for the unstable set, `u^-` for the stable set.
    pub transverse_max: f64,
    /// `u_0 <= 3 r2` (unstable) or `u_0 >= -3 r2` (stable) at every crossing.
    pub u0_bound_holds: bool,
    /// Transverse norm at most `5 r2 / 2` at every crossing.
    pub transverse_bound_holds: bool,
}

/// Integrates the gradient flow (`-grad f` for the unstable set, `+grad f`
/// for the stable set) from a sphere of radius `eps` in the corresponding
/// eigenspace at `point` until `f` crosses `f(point) -+ c`.
pub fn flow_containment_probe(
    model: &Model,
    point: &CriticalPoint,
    c: f64,
    manifold: Manifold,
    directions: usize,
    eps: f64,
) -> Result<ContainmentReport, BirthDeathError> {
    let p = model.params;
    let dim = p.dim();
    let centre = DVector::from_vec(point.location.clone());
    let jet = model.jet(&centre);
    let eig = SymmetricEigen::new(jet.hessian.clone());
    let basis: Vec<DVector<f64>> = (0..dim)
        .filter(|&k| match manifold {
            Manifold::Unstable => eig.eigenvalues[k] < 0.0,
            Manifold::Stable => eig.eigenvalues[k] > 0.0,
        })
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if basis.is_empty() {
        return Err(BirthDeathError::UnexpectedCensus("the chosen manifold is a point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xF10);
    let starts: Vec<DVector<f64>> = (0..directions)
        .map(|k| {
            let coeffs: Vec<f64> = if basis.len() == 1 {
                vec![if k % 2 == 0 { 1.0 } else { -1.0 }]
            } else {
                (0..basis.len()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
            };
            let mut v = DVector::zeros(dim);
            for (b, w) in basis.iter().zip(&coeffs) {
                v.axpy(*w, b, 1.0);
            }
            &centre + v.normalize() * eps
        })
        .collect();
    let (sign, level) = match manifold {
        Manifold::Unstable => (-1.0, point.value - c),
        Manifold::Stable => (1.0, point.value + c),
    };
    let outcomes = crate::par::map(&starts, |y0| {
        flow::integrate(
            |y, dy| dy.copy_from(&(model.gradient(y) * sign)),
            |y| y.norm() > 10.0 || crossed(model, y, level, manifold),
            y0.clone(),
            200.0,
            1e-10,
        )
        .map(|t| t.last().clone())
        .map_err(|e| e.to_string())
    });
    let mut crossings = Vec::new();
    let mut diverged = 0;
    for o in outcomes {
        let y = o.map_err(BirthDeathError::Integration)?;
        if crossed(model, &y, level, manifold) {
            if y.norm() > p.r2 {
                crossings.push(y);
            }
        } else {
            diverged += 1;
        }
    }
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for y in &crossings {
        for k in 0..dim {
            lower[k] = lower[k].min(y[k]);
            upper[k] = upper[k].max(y[k]);
        }
    }
    let transverse = |y: &DVector<f64>| -> f64 {
        let range = match manifold {
            Manifold::Unstable => p.i + 1..dim,
            Manifold::Stable => 1..p.i + 1,
        };
        range.map(|k| y[k] * y[k]).sum::<f64>().sqrt()
    };
    let transverse_max = crossings.iter().map(transverse).fold(0.0, f64::max);
    let (u0_extreme, u0_bound_holds) = match manifold {
        Manifold::Unstable => {
            let m = crossings.iter().map(|y| y[0]).fold(f64::NEG_INFINITY, f64::max);
            (m, m <= 3.0 * p.r2)
        }
        Manifold::Stable => {
            let m = crossings.iter().map(|y| y[0]).fold(f64::INFINITY, f64::min);
            (m, m >= -3.0 * p.r2)
        }
    };
    Ok(ContainmentReport {
        manifold,
        level,
        trajectories: directions,
        crossings: crossings.len(),
        diverged,
        lower,
        upper,
        u0_extreme,
        transverse_max,
        u0_bound_holds,
        transverse_bound_holds: transverse_max <= 2.5 * p.r2,
    })
}

fn crossed(model: &Model, y: &DVector<f64>, level: f64, manifold: Manifold) -> bool {
    let v = model.value(y);
    match manifold {
        Manifold::Unstable => v <= level,
        Manifold::Stable => v >= level,
    }
}

/// Largest radius reached by forward flows started just inside the sphere
/// of radius `A r2 / (A + C0)`, relative to that radius.
pub fn inner_ball_invariance(model: &Model, trajectories: usize, t_max: f64) -> Result<f64, BirthDeathError> {
    let p = model.params;
    let a = p.amplitude;
    let radius = a * p.r2 / (a + C0);
    let dim = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA11);
    let starts: Vec<DVector<f64>> = (0..trajectories)
        .map(|_| DVector::from_fn(dim, |_, _| rng.gen::<f64>() * 2.0 - 1.0).normalize() * (0.999 * radius))
        .collect();
    let runs = crate::par::map(&starts, |y0| {
        let mut worst: f64 = 0.0;
        flow::integrate(
            |y, dy| dy.copy_from(&(-model.gradient(y))),
            |y| {
                worst = worst.max(y.norm());
                false
            },
            y0.clone(),
            t_max,
            1e-10,
        )
        .map(|_| worst.max(y0.norm()))
        .map_err(|e| e.to_string())
    });
    let mut worst: f64 = 0.0;
    for r in runs {
        worst = worst.max(r.map_err(BirthDeathError::Integration)?);
    }
    Ok(worst / radius)
}
