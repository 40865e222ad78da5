use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use torsion_lab::graded_complex::{random_complex, GradedComplex};
use torsion_lab::linalg::{self, c, CMat, C64};
use torsion_lab::morse_complex::cheeger_muller::{cheeger_muller_compare, combinatorial_torsion};
use torsion_lab::morse_complex::suspension::{ball_removed_ranks, gaussian_normalization_probe, suspend, BallPair};
use torsion_lab::morse_complex::{
    build_complex, fiber_criticals, flow_lines, twisted_circle_torsion, ManifoldModel, TrigSeries,
};

fn phase(x: f64) -> C64 {
    c(0.0, x).exp()
}

fn diag_phases(angles: &[f64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(angles.len(), angles.iter().map(|&a| phase(a))))
}

fn conj(w: &CMat, u: &CMat) -> CMat {
    w * u * w.adjoint()
}

#[test]
fn trivial_circle_has_zero_differential() {
    let model = ManifoldModel::circle(TrigSeries::cosine(1), linalg::eye(1)).unwrap();
    let data = build_complex(&model).unwrap();
    assert_eq!(data.complex.ranks(), &[1, 1]);
    assert!(data.complex.differential(0)[(0, 0)].norm() < 1e-14);
    assert_eq!(data.complex.betti().unwrap(), vec![1, 1]);
}

#[test]
fn single_saddle_query_returns_both_arcs() {
    let model = ManifoldModel::twisted_circle(1.1).unwrap();
    let crit = fiber_criticals(&model).unwrap();
    let saddle = crit.iter().position(|c| c.index == 1).unwrap();
    let lines = flow_lines(&model, &crit, saddle).unwrap();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].sign, -lines[1].sign);
    for l in &lines {
        assert!(linalg::frob(&(l.transport.adjoint() * &l.transport - linalg::eye(1))) < 1e-14);
    }
}

/// Oracle: the two arcs of the circle from the maximum at 0 to the minimum
/// at pi. The arc leaving along +s stays in the cell (transport 1, sign +1);
/// the arc leaving along -s crosses the seam backwards (transport
/// e^{-i theta}, sign -1). Summing `n tau^*` gives `1 - e^{i theta}`.
#[test]
fn twisted_circle_determinant() {
    for k in 1..8 {
        let theta = TAU * k as f64 / 8.0 + 0.1;
        let data = build_complex(&ManifoldModel::twisted_circle(theta).unwrap()).unwrap();
        let d = data.complex.differential(0)[(0, 0)];
        let oracle_plus = c(1.0, 0.0) - phase(theta);
        assert!((d.norm() - 2.0 * (0.5 * theta).sin().abs()).abs() < 1e-13);
        assert!((d - oracle_plus).norm() < 1e-13 || (d + oracle_plus).norm() < 1e-13, "{d} vs {oracle_plus}");
    }
}

#[test]
fn quarter_turn_torsion() {
    let t = build_complex(&ManifoldModel::twisted_circle(0.5 * PI).unwrap()).unwrap().complex.finite_torsion().unwrap();
    assert!((t + 0.5 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn torsion_matches_closed_form_on_eight_angles() {
    for k in 0..8 {
        let theta = 0.2 + 0.75 * k as f64;
        let t = combinatorial_torsion(theta).unwrap();
        assert!((t - twisted_circle_torsion(theta)).abs() <= 1e-10, "theta {theta}: {t}");
    }
}

#[test]
fn complex_conjugate_representations_agree() {
    let a = combinatorial_torsion(0.5 * PI).unwrap();
    let b = combinatorial_torsion(1.5 * PI).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn torsion_is_gauge_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let angles = [0.4, 2.0, -1.3];
    let hol = diag_phases(&angles);
    let model = ManifoldModel::circle(TrigSeries::cosine(1), hol).unwrap();
    let t0 = build_complex(&model).unwrap().complex.finite_torsion().unwrap();
    let oracle: f64 = angles.iter().map(|&a| twisted_circle_torsion(a)).sum();
    assert!((t0 - oracle).abs() < 1e-10);
    for _ in 0..5 {
        let w = linalg::random_unitary(&mut rng, 3);
        let t = build_complex(&model.regauged(&w).unwrap()).unwrap().complex.finite_torsion().unwrap();
        assert!((t - t0).abs() <= 1e-10, "{t} vs {t0}");
    }
}

#[test]
fn torus_trivial_rep_has_torus_betti_numbers() {
    let one = linalg::eye(1);
    let model = ManifoldModel::torus(TrigSeries::cosine(1), TrigSeries::cosine(1), one.clone(), one).unwrap();
    let data = build_complex(&model).unwrap();
    assert_eq!(data.counts(), vec![1, 2, 1]);
    assert_eq!(data.complex.betti().unwrap(), vec![1, 2, 1]);
    // Product oracle: every nonzero-index block receives a +1/-1 pair.
    for k in 0..2 {
        let d = data.complex.differential(k);
        assert!(d.iter().all(|z| z.norm() < 1e-14));
    }
    let per_pair = data.flows.len();
    assert_eq!(per_pair, 2 * 2 + 2 * 2);
}

#[test]
fn torus_twisted_rep_is_a_complex() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let w = linalg::random_unitary(&mut rng, 2);
    let hx = conj(&w, &diag_phases(&[0.9, 0.0]));
    let hy = conj(&w, &diag_phases(&[-2.2, 0.0]));
    let fx = TrigSeries { terms: vec![(1, 1.0, 0.0), (2, 0.1, 0.05)] };
    let fy = TrigSeries { terms: vec![(1, 0.7, 0.2)] };
    let data = build_complex(&ManifoldModel::torus(fx, fy, hx, hy).unwrap()).unwrap();
    let d0 = data.complex.differential(0);
    let d1 = data.complex.differential(1);
    assert!((d1 * d0).iter().all(|z| z.norm() < 1e-12));
    // The twisted summand is acyclic; the trivial one contributes (1, 2, 1).
    assert_eq!(data.complex.betti().unwrap(), vec![1, 2, 1]);
}

#[test]
fn cheeger_muller_sweep() {
    for theta in [PI / 3.0, PI / 2.0, PI, 4.0 * PI / 3.0] {
        let row = cheeger_muller_compare(theta, 2000).unwrap();
        assert!(row.gap_exact <= 1e-6, "{row:?}");
        assert!(row.gap_fem <= 1e-2, "{row:?}");
    }
    let pi = cheeger_muller_compare(PI, 400).unwrap();
    assert!((pi.combinatorial + 2f64.ln()).abs() < 1e-12);
}

#[test]
fn suspension_identities_on_random_complexes() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let len = rng.gen_range(2..=4);
        let ranks: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=4)).collect();
        let (cx, _) = random_complex(&mut rng, &ranks, true);
        let n = 2 * rng.gen_range(1..=3);
        let s = suspend(&cx, n, 1.0).unwrap();
        assert_eq!(s.euler(), s.predicted_euler());
        let direct = s.complex.finite_torsion().unwrap();
        let rule = cx.finite_torsion().unwrap() + s.torsion_shift;
        assert!((direct - rule).abs() <= 1e-9 * direct.abs().max(1.0), "{direct} vs {rule}");
    }
}

#[test]
fn gaussian_probe_reports_both_normalisations() {
    for n in [2usize, 4, 6] {
        for (t, tp) in [(0.5, 2.0), (1.0, 3.0), (4.0, 1.5)] {
            let p = gaussian_normalization_probe(n, t, tp).unwrap();
            assert!((p.probability[0] - 1.0).abs() < 1e-12 && (p.probability[1] - 1.0).abs() < 1e-12);
            assert!(p.probability_t_independent);
            let expected = (tp / t).powi(n as i32);
            assert!((p.power_ratio / expected - 1.0).abs() < 1e-12, "{p:?}");
            assert!(!p.power_t_independent);
        }
        let same = gaussian_normalization_probe(n, 1.7, 1.7).unwrap();
        assert!(same.power_t_independent && same.probability_t_independent);
    }
}

#[test]
fn ball_removed_rank_table() {
    let circle = |m: usize| -> GradedComplex {
        let hol = linalg::eye(m);
        build_complex(&ManifoldModel::circle(TrigSeries::cosine(1), hol).unwrap()).unwrap().complex
    };
    for m in [1usize, 3] {
        for n in [2usize, 4] {
            let cx = circle(m);
            let with = ball_removed_ranks(&cx, m, n, Some(BallPair { degree: n, c: 0.8 })).unwrap();
            assert!(with.matches(), "{with:?}");
            assert_eq!(with.computed[1], m);
            assert!(with.computed[2..n].iter().all(|&r| r == 0));
            assert_eq!(with.computed[n], m);
            let without = ball_removed_ranks(&cx, m, n, None).unwrap();
            assert!(without.matches());
            assert_eq!(without.computed, suspend(&cx, n, 1.0).unwrap().complex.betti().unwrap());
        }
    }
}
