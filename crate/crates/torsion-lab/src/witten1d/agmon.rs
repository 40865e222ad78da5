//! Discrete Agmon distance and decay checks.

use super::WittenError;
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

/// Agmon distance `rho_T` from the node set `sources`, on a path (or cycle if
/// `periodic`) whose consecutive nodes carry potential values `f`. Each edge
/// has weight `|f_b - f_a|`, so `rho_T >= T |f(x) - f(source)|` holds exactly
/// along every path. The result is `T` times the `T = 1` distance.
pub fn agmon_distance(f: &[f64], t: f64, sources: &[usize], periodic: bool) -> Vec<f64> {
    let n = f.len();
    let mut g: UnGraph<(), f64> = UnGraph::with_capacity(n + 1, n + sources.len());
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n.saturating_sub(1) {
        g.add_edge(nodes[i], nodes[i + 1], (f[i + 1] - f[i]).abs());
    }
    if periodic && n >= 3 {
        g.add_edge(nodes[n - 1], nodes[0], (f[0] - f[n - 1]).abs());
    }
    let hub = g.add_node(());
    for &s in sources {
        g.add_edge(hub, nodes[s], 0.0);
    }
    let dist = dijkstra(&g, hub, None, |e| *e.weight());
    nodes.iter().map(|v| t * dist.get(v).copied().unwrap_or(f64::INFINITY)).collect()
}

/// Indices of grid-sampled critical points (sign changes of `f'`), with a
/// flag telling whether each is a local minimum.
pub fn critical_nodes(f: &[f64], fp: &[f64], periodic: bool) -> Vec<(usize, bool)> {
    let n = f.len();
    let mut out = Vec::new();
    let last = if periodic { n } else { n - 1 };
    for i in 0..last {
        let j = (i + 1) % n;
        if fp[i] == 0.0 || (fp[i] < 0.0) != (fp[j] < 0.0) {
            if fp[i] == 0.0 && i > 0 && fp[i - 1] == 0.0 {
                continue;
            }
            let k = if fp[i].abs() <= fp[j].abs() { i } else { j };
            let is_min = fp[i] < 0.0 || (fp[i] == 0.0 && fp[j] > 0.0);
            if !out.iter().any(|&(m, _)| m == k) {
                out.push((k, is_min));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgmonDecay {
    /// `sup (log|u| + b rho_T)` over nodes with `rho_T > radius`.
    pub sup: f64,
    /// `min |f'|` over the same nodes.
    pub c_f: f64,
    /// Largest admissible eigenvalue `(b - b^2) c_f^2 T^2 / 4`.
    pub threshold: f64,
}

/// Checks the weighted decay of an eigenvector `u` (normalised to unit
/// sup-norm internally) outside the Agmon neighbourhood `{rho_T <= radius}`
/// of the critical set.
pub fn agmon_decay_check(
    u: &[f64],
    rho: &[f64],
    fp: &[f64],
    eigenvalue: f64,
    b: f64,
    t: f64,
    radius: f64,
) -> Result<AgmonDecay, WittenError> {
    let outside: Vec<usize> = (0..u.len()).filter(|&i| rho[i] > radius).collect();
    let c_f = outside.iter().map(|&i| fp[i].abs()).fold(f64::INFINITY, f64::min);
    let c_f = if c_f.is_finite() { c_f } else { 0.0 };
    let threshold = (b - b * b) * c_f * c_f * t * t / 4.0;
    if !(eigenvalue < threshold) {
        return Err(WittenError::Precondition { value: eigenvalue, threshold });
    }
    let umax = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sup = outside
        .iter()
        .map(|&i| (u[i].abs() / umax).ln() + b * rho[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(AgmonDecay { sup, c_f, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_potential_distance() {
        let f: Vec<f64> = (0..=100).map(|i| 0.5 * i as f64 * 0.01).collect();
        let rho = agmon_distance(&f, 3.0, &[0], false);
        assert!((rho[100] - 3.0 * 0.5 * 1.0).abs() < 1e-12);
        let rho1 = agmon_distance(&f, 1.0, &[0], false);
        for (a, b) in rho.iter().zip(&rho1) {
            assert_eq!(*a, 3.0 * b);
        }
    }

    #[test]
    fn flat_potential_is_refused() {
        let u = vec![1.0; 10];
        let rho = vec![5.0; 10];
        let fp = vec![0.0; 10];
        assert!(matches!(
            agmon_decay_check(&u, &rho, &fp, 0.0, 0.5, 10.0, 2.0),
            Err(WittenError::Precondition { .. })
        ));
    }
}
