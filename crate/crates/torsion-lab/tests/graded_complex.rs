use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torsion_lab::graded_complex::{random_complex, EulerData, GradedComplex};
use torsion_lab::linalg::{self, c, CMat};

/// Rank by Gaussian elimination with complete pivoting, independent of the
/// SVD and eigen-solvers used by the library.
fn elimination_rank(m: &CMat, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = (a.nrows(), a.ncols());
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for step in 0..rows.min(cols) {
        let mut best = (step, step, 0.0);
        for i in step..rows {
            for j in step..cols {
                let v = a[(i, j)].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= rel_tol * scale {
            break;
        }
        a.swap_rows(step, best.0);
        a.swap_columns(step, best.1);
        let pivot = a[(step, step)];
        for i in step + 1..rows {
            let f = a[(i, step)] / pivot;
            for j in step..cols {
                let sub = a[(step, j)] * f;
                a[(i, j)] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

fn ranks_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=5, 2..=5)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn square_zero_and_betti_oracles(seed in any::<u64>(), ranks in ranks_strategy(), metrics in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cx, betti) = random_complex(&mut rng, &ranks, metrics);
        for k in 0..ranks.len().saturating_sub(2) {
            let prod = cx.differential(k + 1) * cx.differential(k);
            let defect = prod.iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(defect <= 1e-12, "defect {defect:e}");
        }
        prop_assert_eq!(cx.betti().unwrap(), betti.clone());
        let elim: Vec<usize> = (0..ranks.len())
            .map(|k| {
                let out = if k + 1 < ranks.len() { elimination_rank(cx.differential(k), 1e-10) } else { 0 };
                let inc = if k > 0 { elimination_rank(cx.differential(k - 1), 1e-10) } else { 0 };
                ranks[k] - out - inc
            })
            .collect();
        prop_assert_eq!(elim, betti.clone());
        prop_assert_eq!(cx.euler().chi, EulerData::from_ranks(&betti).chi);
    }

    /// For an acyclic complex, changing the metric from G to G' moves the
    /// torsion by (1/2) sum (-1)^k log det(G'_k G_k^{-1}).
    #[test]
    fn acyclic_metric_anomaly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = rng.gen_range(1..=3);
        let s = rng.gen_range(1..=3);
        // (r, r + s, s) with full-rank maps is acyclic.
        let ranks = [r, r + s, s];
        let (cx, betti) = loop {
            let out = random_complex(&mut rng, &ranks, true);
            if out.1.iter().all(|&b| b == 0) {
                break out;
            }
        };
        prop_assert!(betti.iter().all(|&b| b == 0));
        let new: Vec<CMat> = ranks.iter().map(|&n| linalg::random_hpd(&mut rng, n, 0.3, 2.0)).collect();
        let moved = cx.with_metrics(new.clone()).unwrap();
        let mut oracle = 0.0;
        for k in 0..3 {
            let ratio = &new[k] * linalg::inverse(cx.metric(k)).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            oracle += 0.5 * sign * linalg::log_abs_det(&ratio);
        }
        let direct = moved.finite_torsion().unwrap() - cx.finite_torsion().unwrap();
        prop_assert!((direct - oracle).abs() <= 1e-9, "{direct} vs {oracle}");
    }
}

#[test]
fn heat_integral_matches_spectral_torsion() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..20 {
        let ranks: Vec<usize> = (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(1..=4)).collect();
        let (cx, _) = random_complex(&mut rng, &ranks, true);
        let a = cx.finite_torsion().unwrap();
        let b = cx.torsion_integral().unwrap();
        assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn laplacians_are_hermitian_in_their_metric() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (cx, _) = random_complex(&mut rng, &[3, 4, 2], true);
    for k in 0..3 {
        let l = cx.laplacian(k).unwrap();
        let g = cx.metric(k);
        let gl = g * &l;
        assert!(linalg::hermitian_defect(&gl) < 1e-10);
        assert!(cx.laplacian_spectrum(k).iter().all(|&x| x > -1e-12));
    }
}

#[test]
fn harmonic_basis_is_orthonormal_and_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (cx, betti) = random_complex(&mut rng, &[2, 4, 3, 1], true);
    for k in 0..4 {
        let h = cx.harmonic_basis(k).unwrap();
        assert_eq!(h.ncols(), betti[k]);
        let gram = h.adjoint() * cx.metric(k) * &h;
        assert!(linalg::frob(&(gram - linalg::eye(betti[k]))) < 1e-10);
        if k + 1 < 4 {
            assert!(linalg::frob(&(cx.differential(k) * &h)) < 1e-10);
        }
    }
}

#[test]
fn zero_rank_degrees_are_allowed() {
    let cx = GradedComplex::standard(vec![0, 1, 1], vec![linalg::zeros(1, 0), CMat::from_element(1, 1, c(2.0, 0.0))])
        .unwrap();
    assert_eq!(cx.betti().unwrap(), vec![0, 0, 0]);
    // Delta_1 = Delta_2 = 4: (1/2)(-1 * log 4 + 2 * log 4) = log 2.
    assert!((cx.finite_torsion().unwrap() - 2f64.ln()).abs() < 1e-14);
}
