//! Flow lines between critical points of adjacent index, located by shooting
//! along whichever of `W^u(p)` or `W^s(q)` is one-dimensional.
//!
//! Sign convention: at a point of a flow line `gamma` from `p` to `q`, let `xi`
//! be the flow direction. Then `n_gamma = +1` when `xi` followed by the chosen
//! unstable basis of `q` is positively oriented against the chosen
//! orientation of `W^u(p)`. Maxima carry the standard orientation of the chart.

use super::{periodic_distance, Critical, ManifoldModel, MorseError, Result};
use crate::flow;
use crate::linalg::CMat;
use crate::par;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::TAU;

/// Offset of the shooting start from the critical point.
const START: f64 = 1e-5;
/// Radius of the ball around a target in which integration stops.
const CAPTURE: f64 = 1e-4;
const TOL: f64 = 1e-10;
const T_MAX: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct FlowLine {
    /// Index into the critical list of the upper point.
    pub from: usize,
    pub to: usize,
    pub sign: i8,
    /// Cell changes along each chart direction, from `from` to `to`.
    pub winding: Vec<i64>,
    /// Parallel transport `F_from -> F_to`.
    pub transport: CMat,
}

struct Shot {
    landed: usize,
    end: DVector<f64>,
}

fn shoot(model: &ManifoldModel, crit: &[Critical], origin: usize, dir: &[f64], forward: bool) -> Result<Shot> {
    let p = &crit[origin];
    let y0 = DVector::from_iterator(p.location.len(), p.location.iter().zip(dir).map(|(x, d)| x + START * d));
    let sign = if forward { -1.0 } else { 1.0 };
    let near = |y: &DVector<f64>| -> Option<usize> {
        crit.iter()
            .enumerate()
            .filter(|(j, _)| *j != origin)
            .find(|(_, c)| periodic_distance(&c.location, y.as_slice()) < CAPTURE)
            .map(|(j, _)| j)
    };
    let traj = flow::integrate(
        |y, dy| dy.copy_from(&(model.gradient(y.as_slice()) * sign)),
        |y| near(y).is_some(),
        y0,
        T_MAX,
        TOL,
    )
    .map_err(|e| MorseError::FlowFailed { from: origin, reason: e.to_string() })?;
    let end = traj.last().clone();
    let landed = near(&end).ok_or_else(|| MorseError::FlowFailed {
        from: origin,
        reason: format!("no critical point reached within t = {T_MAX}"),
    })?;
    Ok(Shot { landed, end })
}

fn cell_offset(lifted: &DVector<f64>, canonical: &[f64]) -> Vec<i64> {
    lifted.iter().zip(canonical).map(|(y, c)| ((y - c) / TAU).round() as i64).collect()
}

fn det2(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// All flow lines leaving `p` (when `W^u(p)` is a line) or arriving at `q`
/// (when `W^s(q)` is a line and the upper points are maxima).
pub fn flow_lines(model: &ManifoldModel, crit: &[Critical], j: usize) -> Result<Vec<FlowLine>> {
    let dim = model.dim();
    let c = &crit[j];
    let mut out = Vec::new();
    if c.index == 1 {
        let e = &c.unstable[0];
        for sigma in [1.0, -1.0] {
            let dir: Vec<f64> = e.iter().map(|x| sigma * x).collect();
            let shot = shoot(model, crit, j, &dir, true)?;
            let q = &crit[shot.landed];
            if q.index != 0 {
                return Err(MorseError::NonTransversal { from: j, to: shot.landed, landed: shot.landed, landed_index: q.index });
            }
            let winding = cell_offset(&shot.end, &q.location);
            out.push(FlowLine {
                from: j,
                to: shot.landed,
                sign: if sigma > 0.0 { 1 } else { -1 },
                transport: model.transport(&winding),
                winding,
            });
        }
    }
    if dim >= 2 && c.index + 1 == dim {
        let s = &c.stable[0];
        for sigma in [1.0, -1.0] {
            let dir: Vec<f64> = s.iter().map(|x| sigma * x).collect();
            let shot = shoot(model, crit, j, &dir, false)?;
            let p = &crit[shot.landed];
            if p.index != dim {
                return Err(MorseError::NonTransversal { from: shot.landed, to: j, landed: shot.landed, landed_index: p.index });
            }
            // The forward flow arrives at `c` moving along `-sigma s`.
            let xi: Vec<f64> = s.iter().map(|x| -sigma * x).collect();
            let n = det2(&xi, &c.unstable[0]);
            let winding: Vec<i64> = cell_offset(&shot.end, &p.location).into_iter().map(|w| -w).collect();
            out.push(FlowLine {
                from: shot.landed,
                to: j,
                sign: if n > 0.0 { 1 } else { -1 },
                transport: model.transport(&winding),
                winding,
            });
        }
    }
    Ok(out)
}

/// Flow lines for every adjacent-index pair, in a deterministic order.
pub fn all_flow_lines(model: &ManifoldModel, crit: &[Critical]) -> Result<Vec<FlowLine>> {
    let ids: Vec<usize> = (0..crit.len()).collect();
    let per: Vec<Result<Vec<FlowLine>>> = par::map(&ids, |&j| flow_lines(model, crit, j));
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    out.sort_by_key(|f| (f.from, f.to, f.winding.clone(), f.sign));
    Ok(out)
}

/// Sum over flow lines from `p` to `q` of `n_gamma tau_gamma^*`, the
/// `(p, q)` block of the cochain differential.
pub fn incidence_block(flows: &[FlowLine], p: usize, q: usize, m: usize) -> CMat {
    let mut b = DMatrix::zeros(m, m);
    for f in flows.iter().filter(|f| f.from == p && f.to == q) {
        b += f.transport.adjoint() * crate::linalg::c(f.sign as f64, 0.0);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::super::{fiber_criticals, TrigSeries};
    use super::*;
    use crate::linalg;

    #[test]
    fn height_function_on_circle() {
        let model = ManifoldModel::circle(TrigSeries::cosine(1), linalg::eye(1)).unwrap();
        let crit = fiber_criticals(&model).unwrap();
        let lines = all_flow_lines(&model, &crit).unwrap();
        assert_eq!(lines.len(), 2);
        let signs: Vec<i8> = lines.iter().map(|l| l.sign).collect();
        assert!(signs.contains(&1) && signs.contains(&-1));
        assert!(incidence_block(&lines, 1, 0, 1)[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn twisted_arcs_pick_up_holonomy() {
        let theta = 0.7;
        let model = ManifoldModel::twisted_circle(theta).unwrap();
        let crit = fiber_criticals(&model).unwrap();
        let lines = all_flow_lines(&model, &crit).unwrap();
        let windings: Vec<i64> = lines.iter().map(|l| l.winding[0]).collect();
        assert_eq!(windings.iter().map(|w| w.abs()).sum::<i64>(), 1);
        let d = incidence_block(&lines, 1, 0, 1)[(0, 0)];
        assert!((d.norm() - 2.0 * (0.5 * theta).sin()).abs() < 1e-14);
    }
}
