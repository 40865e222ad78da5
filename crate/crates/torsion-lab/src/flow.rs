//! Adaptive Dormand-Prince integration of autonomous vector fields with a
//! stopping predicate evaluated after every accepted step.

use nalgebra::DVector;
use ode_solvers::dop_shared::{IntegrationError, OutputType};
use ode_solvers::{Dopri5, System};

struct Field<F, S> {
    rhs: F,
    stop: S,
}

impl<F, S> System<f64, DVector<f64>> for Field<F, S>
where
    F: Fn(&DVector<f64>, &mut DVector<f64>),
    S: FnMut(&DVector<f64>) -> bool,
{
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        (self.rhs)(y, dy)
    }

    fn solout(&mut self, _t: f64, y: &DVector<f64>, _dy: &DVector<f64>) -> bool {
        (self.stop)(y)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Integrates `y' = rhs(y)` from `y0` over `[0, t_max]`, stopping early at the
/// first accepted step for which `stop` returns true.
pub fn integrate(
    rhs: impl Fn(&DVector<f64>, &mut DVector<f64>),
    stop: impl FnMut(&DVector<f64>) -> bool,
    y0: DVector<f64>,
    t_max: f64,
    tol: f64,
) -> Result<Trajectory, IntegrationError> {
    let mut solver = Dopri5::from_param(
        Field { rhs, stop },
        0.0,
        t_max,
        t_max,
        y0,
        tol,
        tol,
        0.9,
        0.04,
        0.2,
        10.0,
        t_max,
        0.0,
        1_000_000,
        u32::MAX,
        OutputType::Sparse,
    );
    solver.integrate()?;
    Ok(Trajectory { times: solver.x_out().clone(), states: solver.y_out().clone() })
}
