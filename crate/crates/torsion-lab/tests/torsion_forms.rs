use torsion_lab::linalg::{self, c};
use torsion_lab::torsion_forms::*;

fn anomaly_residual(m: usize, nodes: usize, spec: HolonomyFamilySpec) -> f64 {
    let (fam, metric) = holonomy_family(&HolonomyFamilySpec { m, ..spec }).unwrap();
    let mut q = TorsionQuadrature::new(1e-3, 400.0);
    q.nodes = nodes;
    anomaly_check(&fam, &metric, &q).unwrap().max_residual
}

#[test]
fn anomaly_residual_small_and_second_order() {
    let spec = HolonomyFamilySpec::default();
    let coarse = anomaly_residual(64, 200, spec);
    let fine = anomaly_residual(128, 400, spec);
    assert!(coarse <= 1e-4, "{coarse:e}");
    assert!(coarse / fine >= 3.0, "{coarse:e} -> {fine:e}");
}

#[test]
fn anomaly_over_holonomies_and_gauges() {
    for (k, phases) in [[0.3, -2.0, 1.0], [2.5, 0.1, -0.4], [1.0, 1.0, 1.0]].into_iter().enumerate() {
        for gauge in [false, true] {
            let spec = HolonomyFamilySpec { phases, gauge, seed: 100 + k as u64, ..HolonomyFamilySpec::default() };
            let r = anomaly_residual(64, 200, spec);
            assert!(r <= 1e-4, "phases {phases:?} gauge {gauge}: {r:e}");
        }
    }
}

/// The discrete harmonic term is a log-ratio over each edge, so it telescopes
/// against edge differences of the zeta torsion and the residual is round-off.
#[test]
fn grr_residual_is_exact_on_edges() {
    let len = |s: f64| 2.0 + 0.4 * s.cos() + 0.2 * (2.0 * s).sin();
    let a = grr_residual(32, &[0.2, 0.0], len, 12).unwrap().max_residual;
    let b = grr_residual(64, &[0.2, 0.0], len, 12).unwrap().max_residual;
    assert!(a <= 1e-10 && b <= 1e-10, "{a:e}, {b:e}");
}

/// Along a linear metric path, the change of the truncated torsion equals the
/// transgression at the truncation time minus the change of the L^2 metric on
/// cohomology. For this family cohomology is concentrated in degree 0, where
/// the L^2 metric is the restriction of the Gram matrix to ker d_0.
#[test]
fn metric_change_matches_transgression() {
    let spec = HolonomyFamilySpec { m: 8, ..HolonomyFamilySpec::default() };
    let (fam, g0) = holonomy_family(&spec).unwrap();
    let g1: FamilyMetric = g0
        .iter()
        .map(|gs| {
            gs.iter()
                .enumerate()
                .map(|(k, g)| g * c(1.0 + 0.5 * k as f64, 0.0) + linalg::eye(g.nrows()) * c(0.2, 0.0))
                .collect()
        })
        .collect();
    let path = |l: f64| -> FamilyMetric {
        g0.iter()
            .zip(&g1)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * c(1.0 - l, 0.0) + y * c(l, 0.0)).collect())
            .collect()
    };
    for tau in [1e-3, 0.1, 1.0] {
        let mut q = TorsionQuadrature::new(tau, 400.0);
        q.nodes = 400;
        let t0 = torsion_form_tl(&fam, &g0, &q).unwrap();
        let t1 = torsion_form_tl(&fam, &g1, &q).unwrap();
        let tr = transgression_at(&fam, path, 32, tau).unwrap();
        for j in 0..fam.samples() {
            let b = fam.fiber(j, &g0).unwrap().harmonic_basis(0).unwrap();
            let harmonic = 0.5 * linalg::log_abs_det(&(b.adjoint() * &g1[j][0] * &b));
            let lhs = t1.degree0[j].re - t0.degree0[j].re;
            let rhs = tr.degree0[j].re - harmonic;
            assert!((lhs - rhs).abs() <= 1e-4, "tau {tau} sample {j}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn invalid_quadrature_rejected() {
    let (fam, metric) = holonomy_family(&HolonomyFamilySpec { m: 8, ..HolonomyFamilySpec::default() }).unwrap();
    let bad = TorsionQuadrature::new(2.0, 1.0);
    assert!(matches!(torsion_form_tl(&fam, &metric, &bad), Err(FormError::InvalidTau { .. })));
}
