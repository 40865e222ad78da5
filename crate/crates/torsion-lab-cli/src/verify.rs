//! The acceptance suite. Every criterion has its tolerance and runtime
//! budget pinned here. Summary lines carry no timings, so two runs print
//! byte-identical summaries; timings are reported separately.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};
use torsion_lab::birth_death::census::{find_critical_points, separation_report, CriticalPoint};
use torsion_lab::birth_death::profiles::build_profiles;
use torsion_lab::birth_death::{Model, ModelParams, Stage};
use torsion_lab::graded_complex::random_complex;
use torsion_lab::linalg::{self, CMat};
use torsion_lab::morse_complex::cheeger_muller::cheeger_muller_compare;
use torsion_lab::morse_complex::suspension::{ball_removed_ranks, BallPair};
use torsion_lab::morse_complex::{build_complex, ManifoldModel, TrigSeries};
use torsion_lab::torsion_forms::{anomaly_check, holonomy_family, HolonomyFamilySpec, TorsionQuadrature};
use torsion_lab::witten1d::profile::PProfile;
use torsion_lab::witten1d::schauder::{schauder_norm, SchauderIndex};
use torsion_lab::witten1d::{
    agmon_scan, cells_for, cosine, cubic_model_eigs, glued_potential, gluing_scan, potential, small_eigenvalue_scan,
    supersymmetry_defect, Boundary, GluingSetup, PotentialFn, Topology, WittenProblem1D,
};

/// Parameters of the birth-death census criteria. `r2` is exposed so the
/// suite can be run against a corrupted constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusSetup {
    pub n: usize,
    pub i: usize,
    pub r1: f64,
    pub r2: f64,
    pub delta: f64,
    pub amplitude: f64,
}

impl Default for CensusSetup {
    fn default() -> Self {
        CensusSetup { n: 6, i: 3, r1: 0.04, r2: 0.06, delta: 0.0015, amplitude: 1000.0 }
    }
}

impl CensusSetup {
    fn params(&self, y: f64) -> Result<ModelParams, String> {
        ModelParams::new(self.n, self.i, self.r1, self.r2, self.delta, y, self.amplitude).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub census: CensusSetup,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

/// Outcome of a criterion body: pass flag and a deterministic detail string.
type Check = Result<(bool, String), String>;

struct Spec {
    id: usize,
    name: &'static str,
    budget_s: u64,
    run: fn(&VerifyOptions) -> Check,
}

/// Dependency order: the algebraic property suites first, then the
/// modules built on them.
const SUITE: [Spec; 10] = [
    Spec { id: 10, name: "property suites", budget_s: 120, run: property_suites },
    Spec { id: 1, name: "birth-death census", budget_s: 60, run: birth_death_census },
    Spec { id: 2, name: "separation stability", budget_s: 120, run: separation_stability },
    Spec { id: 3, name: "anomaly formula", budget_s: 30, run: anomaly_formula },
    Spec { id: 4, name: "cheeger-muller", budget_s: 60, run: cheeger_muller },
    Spec { id: 9, name: "mayer-vietoris ranks", budget_s: 10, run: mayer_vietoris },
    Spec { id: 5, name: "spectral gluing", budget_s: 120, run: spectral_gluing },
    Spec { id: 6, name: "small-eigenvalue decay", budget_s: 120, run: small_eigenvalue_decay },
    Spec { id: 7, name: "agmon decay", budget_s: 60, run: agmon_decay },
    Spec { id: 8, name: "cubic-model scaling", budget_s: 30, run: cubic_scaling },
];

/// Runs one criterion by id.
pub fn verify_one(id: usize, opts: &VerifyOptions) -> Option<CriterionResult> {
    SUITE.iter().find(|s| s.id == id).map(|s| run_spec(s, opts))
}

fn run_spec(spec: &Spec, opts: &VerifyOptions) -> CriterionResult {
    let start = Instant::now();
    let outcome = (spec.run)(opts);
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(spec.budget_s);
    let (mut passed, mut detail) = match outcome {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > budget {
        passed = false;
        detail.push_str(&format!("; over the {} s budget", spec.budget_s));
    }
    CriterionResult { id: spec.id, name: spec.name, passed, detail, elapsed, budget }
}

/// Runs the whole suite, calling `report` after each criterion.
pub fn verify_all(opts: &VerifyOptions, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    SUITE
        .iter()
        .map(|s| {
            let r = run_spec(s, opts);
            report(&r);
            r
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- 1 and 2

const CLOSED_FORM_RTOL: f64 = 1e-8;
const SEPARATION_RTOL: f64 = 0.05;

/// Index labels per sign of `y`, written out from the local models: at
/// `y = 0` the origin is a birth-death point, for `y > 0` it splits into
/// indices `i` and `i + 1`, for `y < 0` it disappears.
fn oracle_labels(i: usize, y_sign: i32) -> Vec<String> {
    let mut v: Vec<String> = [0, i, i - 1, 1, i + 1, i].iter().map(|k| k.to_string()).collect();
    match y_sign {
        0 => v.push(format!("bd({i})")),
        1 => v.extend([i.to_string(), (i + 1).to_string()]),
        _ => {}
    }
    v.sort();
    v
}

fn nearest<'a>(points: &'a [CriticalPoint], target: &[f64]) -> Option<&'a CriticalPoint> {
    points.iter().min_by(|a, b| distance(&a.location, target).total_cmp(&distance(&b.location, target)))
}

fn birth_death_census(opts: &VerifyOptions) -> Check {
    let s = opts.census;
    let half = 0.5 * s.delta * s.delta;
    let mut counts = Vec::new();
    let mut ok = true;
    let mut at_zero = Vec::new();
    for (y, sign, expected) in [(0.0, 0, 7usize), (half, 1, 8), (-half, -1, 6)] {
        let p = s.params(y)?;
        let census = find_critical_points(&Model::new(p).map_err(|e| e.to_string())?);
        counts.push(census.points.len());
        ok &= census.points.len() == expected && census.labels() == oracle_labels(s.i, sign);
        if sign == 0 {
            at_zero = census.points;
        }
    }
    // v_{1,+} and v_{2,+} on the u_1 axis.
    let (a, d) = (s.amplitude, s.delta);
    let mut worst: f64 = 0.0;
    for u1 in [a * s.r2 / (a + 2.0 + 2.0 * d), -a * s.r2 / (a + 2.0 - 2.0 * d)] {
        let mut target = vec![0.0; s.n + 1];
        target[1] = u1;
        let err = nearest(&at_zero, &target).map_or(f64::INFINITY, |c| distance(&c.location, &target) / u1.abs());
        worst = worst.max(err);
    }
    ok &= worst <= CLOSED_FORM_RTOL;
    let counts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
    Ok((ok, format!("counts {} (want 7/8/6), closed-form location error {worst:.1e} (tol {CLOSED_FORM_RTOL:.0e})", counts.join("/"))))
}

fn separation_stability(opts: &VerifyOptions) -> Check {
    let rep = separation_report(&opts.census.params(0.0)?).map_err(|e| e.to_string())?;
    let ok = rep.max_relative_change <= SEPARATION_RTOL;
    Ok((
        ok,
        format!(
            "c {:.4e}, c' {:.4e}, C {:.4e}; max relative change {:.2e} (tol {SEPARATION_RTOL})",
            rep.at_a.c, rep.at_a.c_prime, rep.at_a.big_c, rep.max_relative_change
        ),
    ))
}

// ---------------------------------------------------------------------- 3

const ANOMALY_TOL: f64 = 1e-4;
const ANOMALY_DECREASE: f64 = 3.0;

fn anomaly_formula(_: &VerifyOptions) -> Check {
    let residual = |m: usize, nodes: usize| -> Result<f64, String> {
        let (fam, metric) = holonomy_family(&HolonomyFamilySpec { m, ..HolonomyFamilySpec::default() }).map_err(|e| e.to_string())?;
        let mut q = TorsionQuadrature::new(1e-3, 400.0);
        q.nodes = nodes;
        Ok(anomaly_check(&fam, &metric, &q).map_err(|e| e.to_string())?.max_residual)
    };
    let coarse = residual(64, 200)?;
    let fine = residual(128, 400)?;
    let ratio = coarse / fine;
    let ok = coarse <= ANOMALY_TOL && ratio >= ANOMALY_DECREASE;
    Ok((ok, format!("residual {coarse:.2e} at m=64 (tol {ANOMALY_TOL:.0e}), {fine:.2e} at m=128, decrease {ratio:.2}x (need {ANOMALY_DECREASE}x)")))
}

// ---------------------------------------------------------------------- 4

const CM_EXACT_TOL: f64 = 1e-6;
const CM_FEM_TOL: f64 = 1e-2;

fn cheeger_muller(_: &VerifyOptions) -> Check {
    let (mut exact, mut fem): (f64, f64) = (0.0, 0.0);
    for theta in [PI / 3.0, PI / 2.0, PI, 4.0 * PI / 3.0] {
        let r = cheeger_muller_compare(theta, 2000).map_err(|e| e.to_string())?;
        exact = exact.max(r.gap_exact);
        fem = fem.max(r.gap_fem);
    }
    let ok = exact <= CM_EXACT_TOL && fem <= CM_FEM_TOL;
    Ok((ok, format!("max comb/exact gap {exact:.2e} (tol {CM_EXACT_TOL:.0e}), max fem/exact gap {fem:.2e} at N=2000 (tol {CM_FEM_TOL:.0e})")))
}

// ---------------------------------------------------------------------- 9

fn mayer_vietoris(_: &VerifyOptions) -> Check {
    let mut ok = true;
    let mut cases = 0;
    for m in [1usize, 3] {
        let cx = build_complex(&ManifoldModel::circle(TrigSeries::cosine(1), linalg::eye(m)).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .complex;
        for n in [2usize, 4] {
            let with = ball_removed_ranks(&cx, m, n, Some(BallPair { degree: n, c: 0.8 })).map_err(|e| e.to_string())?;
            // The three-case table, written out: H^l for l >= N, C^m at l = 1, zero between.
            let base = cx.betti().map_err(|e| e.to_string())?;
            let table: Vec<usize> =
                (0..with.computed.len()).map(|l| if l >= n { base.get(l - n).copied().unwrap_or(0) } else if l == 1 { m } else { 0 }).collect();
            ok &= with.computed == table;
            let without = ball_removed_ranks(&cx, m, n, None).map_err(|e| e.to_string())?;
            ok &= without.matches();
            cases += 1;
        }
    }
    Ok((ok, format!("{cases} (m, N) cases against the three-case rank table")))
}

// ---------------------------------------------------------------------- 5

const GLUE_FINAL_RTOL: f64 = 1e-2;
const GLUE_FLOOR: f64 = 1e-6;
/// Slack for "non-increasing": gaps reach a discretisation noise floor.
const GLUE_MONOTONE_SLACK: f64 = 1e-10;

fn spectral_gluing(_: &VerifyOptions) -> Check {
    let setup = GluingSetup { t: 40.0, r: 0.2, y_a: PI / 4.0, y_b: 5.0 * PI / 4.0, k: 7, f_slope: 2.0 };
    let rep = gluing_scan(cosine(2.0), &setup, &[1.0, 4.0, 16.0, 64.0]).map_err(|e| e.to_string())?;
    let mut monotone = true;
    let mut final_ok = true;
    let mut worst_final: f64 = 0.0;
    for (k, &lam) in rep.split.iter().enumerate() {
        let slack = GLUE_MONOTONE_SLACK * lam.max(1.0);
        monotone &= rep.rows.windows(2).all(|w| w[1].gaps[k] <= w[0].gaps[k] + slack);
        let last = rep.rows.last().map_or(f64::INFINITY, |r| r.gaps[k]);
        let tol = GLUE_FINAL_RTOL * lam.max(GLUE_FLOOR);
        final_ok &= last <= tol;
        worst_final = worst_final.max(last / tol);
    }
    let small = rep.rows.last().map_or(0, |r| r.small_count);
    let kernels = rep.absolute_kernel + rep.relative_kernel;
    let ok = monotone && final_ok && small == kernels && !rep.ambiguous;
    Ok((
        ok,
        format!(
            "gaps non-increasing: {monotone}; final gap / tolerance {worst_final:.2e}; small cluster {small} vs kernels {}+{}",
            rep.absolute_kernel, rep.relative_kernel
        ),
    ))
}

// ---------------------------------------------------------------------- 6

const DECAY_RTOL: f64 = 0.1;

fn small_eigenvalue_decay(_: &VerifyOptions) -> Check {
    let ts: Vec<f64> = (2..=8).map(|i| 10.0 * i as f64).collect();
    let fit = small_eigenvalue_scan(cosine(2.0), 2.0, &ts, 1).map_err(|e| e.to_string())?;
    let prediction = -2.0 * fit.barrier;
    let err = (fit.slope - prediction).abs() / prediction.abs();
    let ok = fit.ts.len() == ts.len() && err <= DECAY_RTOL;
    Ok((ok, format!("slope {:.4} vs -2 x barrier {:.4}; relative error {err:.2e} (tol {DECAY_RTOL})", fit.slope, prediction)))
}

// ---------------------------------------------------------------------- 7

const AGMON_SPREAD: f64 = 2.0;

fn agmon_decay(_: &VerifyOptions) -> Check {
    let rows = agmon_scan(cosine(2.0), 2.0, &[10.0, 20.0, 40.0, 80.0], 0.5, 2.0).map_err(|e| e.to_string())?;
    let sups: Vec<f64> = rows.iter().map(|r| r.decay.sup).collect();
    let hi = sups.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi - lo;
    let ok = sups.iter().all(|s| s.is_finite()) && spread <= AGMON_SPREAD;
    Ok((ok, format!("weighted sup in [{lo:.3}, {hi:.3}] over T = 10..80; spread {spread:.3} (tol {AGMON_SPREAD})")))
}

// ---------------------------------------------------------------------- 8

const CUBIC_RTOL: f64 = 0.01;

fn cubic_scaling(_: &VerifyOptions) -> Check {
    let ladders: Vec<Vec<f64>> = [1.0f64, 8.0, 64.0]
        .iter()
        .map(|&t| cubic_model_eigs(t, 6, 1500).map(|e| e.iter().map(|l| l / t.powf(2.0 / 3.0)).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        for ladder in &ladders[1..] {
            worst = worst.max(rel(ladder[k], ladders[0][k]));
        }
    }
    let ok = worst <= CUBIC_RTOL;
    Ok((ok, format!("max relative drift of lambda_k / T^(2/3) for k <= 5: {worst:.2e} (tol {CUBIC_RTOL})")))
}

// --------------------------------------------------------------------- 10

const SQUARE_ZERO_TOL: f64 = 1e-12;
const NORM_SLACK: f64 = 1e-12;
const FD_RTOL: f64 = 1e-6;
const SUSY_RTOL: f64 = 1e-6;

fn property_suites(_: &VerifyOptions) -> Check {
    let (sq, sq_ok) = square_zero_suite();
    let (schauder_ok, pairs) = schauder_suite();
    let (fd, fd_count) = gradient_suite()?;
    let susy = susy_suite()?;
    let ok = sq_ok && schauder_ok && fd <= FD_RTOL && susy <= SUSY_RTOL;
    Ok((
        ok,
        format!(
            "d^2 defect {sq:.1e} on 200 complexes; schauder bounds on {pairs} pairs: {schauder_ok}; \
             gradient fd error {fd:.1e} over {fd_count} functions (tol {FD_RTOL:.0e}); susy pairing {susy:.1e} (tol {SUSY_RTOL:.0e})"
        ),
    ))
}

fn square_zero_suite() -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..200 {
        let len: usize = rng.gen_range(2..=5);
        let ranks: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=5)).collect();
        let metrics = rng.gen_bool(0.5);
        let (cx, betti) = random_complex(&mut rng, &ranks, metrics);
        for k in 0..len.saturating_sub(2) {
            let prod = cx.differential(k + 1) * cx.differential(k);
            worst = worst.max(prod.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        ok &= cx.betti().is_ok_and(|b| b == betti);
    }
    (worst, ok && worst <= SQUARE_ZERO_TOL)
}

fn schauder_suite() -> (bool, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let quasi = |b: &CMat, p: f64| -> f64 {
        if p >= 1.0 {
            schauder_norm(b, SchauderIndex::Finite(p))
        } else {
            b.clone().singular_values().iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    };
    let mut ok = true;
    let pairs = 100;
    for _ in 0..pairs {
        let b1 = linalg::random_matrix(&mut rng, 5, 5);
        let b2 = linalg::random_matrix(&mut rng, 5, 5);
        let (n1, n2) = (rng.gen_range(1.0..6.0), rng.gen_range(1.0..6.0));
        let n3 = 1.0 / (1.0 / n1 + 1.0 / n2);
        ok &= quasi(&(&b1 * &b2), n3) <= quasi(&b1, n1) * quasi(&b2, n2) * (1.0 + NORM_SLACK);
        let fin = |b: &CMat| schauder_norm(b, SchauderIndex::Finite(n1));
        ok &= fin(&(&b1 + &b2)) <= (fin(&b1) + fin(&b2)) * (1.0 + NORM_SLACK);
        let rank = rng.gen_range(1..4);
        let low = linalg::random_matrix(&mut rng, 6, rank) * linalg::random_matrix(&mut rng, rank, 6);
        let inf = schauder_norm(&low, SchauderIndex::Infinity);
        let nr = schauder_norm(&low, SchauderIndex::Finite(n2));
        ok &= nr <= (rank as f64).powf(1.0 / n2) * inf * (1.0 + NORM_SLACK) && nr >= inf * (1.0 - NORM_SLACK);
    }
    (ok, pairs)
}

/// Worst relative central-difference error of `f'` against `f` on `samples`,
/// relative to the largest `|f'|` seen.
fn fd_1d(f: &dyn Fn(f64) -> [f64; 3], samples: &[f64], h: f64) -> f64 {
    let scale = samples.iter().map(|&s| f(s)[1].abs()).fold(1e-3, f64::max);
    samples
        .iter()
        .map(|&s| ((f(s + h)[0] - f(s - h)[0]) / (2.0 * h) - f(s)[1]).abs() / scale)
        .fold(0.0, f64::max)
}

/// Worst relative central-difference error of a gradient in several variables.
fn fd_nd(value: &dyn Fn(&[f64]) -> f64, grad: &dyn Fn(&[f64]) -> Vec<f64>, points: &[Vec<f64>], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for x in points {
        let g = grad(x);
        let scale = g.iter().map(|v| v.abs()).fold(1e-3, f64::max);
        for k in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            worst = worst.max(((value(&xp) - value(&xm)) / (2.0 * h) - g[k]).abs() / scale);
        }
    }
    worst
}

fn gradient_suite() -> Result<(f64, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    let mut count = 0;

    // Birth-death model in every stage and for each sign of y, plus its profiles.
    let s = CensusSetup::default();
    let half = 0.5 * s.delta * s.delta;
    for y in [0.0, half, -half] {
        let p = s.params(y)?;
        for stage in [Stage::Base, Stage::Shaped, Stage::Full] {
            let m = Model::new(p).map_err(|e| e.to_string())?.with_stage(stage);
            let points: Vec<Vec<f64>> = (0..60)
                .map(|_| {
                    let dir = DVector::from_fn(p.dim(), |_, _| rng.gen::<f64>() * 2.0 - 1.0).normalize();
                    (dir * (3.0 * p.r2 * rng.gen::<f64>())).iter().copied().collect()
                })
                .collect();
            let value = |x: &[f64]| m.value(&DVector::from_column_slice(x));
            let grad = |x: &[f64]| m.gradient(&DVector::from_column_slice(x)).iter().copied().collect::<Vec<_>>();
            worst = worst.max(fd_nd(&value, &grad, &points, 1e-7));
            count += 1;
        }
    }
    let prof = build_profiles(&s.params(0.0)?).map_err(|e| e.to_string())?;
    let radii: Vec<f64> = (0..400).map(|_| rng.gen_range(0.0..3.0 * s.r2)).collect();
    let shaping: [&dyn Fn(f64) -> [f64; 3]; 3] = [&|r| prof.eta.eval(r), &|r| prof.eta_tilde.eval(r), &|r| prof.q.eval(r)];
    for f in shaping {
        worst = worst.max(fd_1d(f, &radii, 1e-7));
        count += 1;
    }

    // Circle and torus Morse functions.
    let models = [
        ManifoldModel::circle(TrigSeries::cosine(1), linalg::eye(1)),
        ManifoldModel::circle(TrigSeries { terms: vec![(1, 1.0, 0.0), (2, 0.3, -0.2), (3, 0.05, 0.1)] }, linalg::eye(1)),
        ManifoldModel::torus(TrigSeries { terms: vec![(1, 1.0, 0.0), (2, 0.1, 0.05)] }, TrigSeries { terms: vec![(1, 0.7, 0.2)] }, linalg::eye(1), linalg::eye(1)),
    ];
    for model in models {
        let model = model.map_err(|e| e.to_string())?;
        let points: Vec<Vec<f64>> = (0..200).map(|_| (0..model.dim()).map(|_| rng.gen_range(0.0..TAU)).collect()).collect();
        let grad = |x: &[f64]| model.gradient(x).iter().copied().collect::<Vec<_>>();
        worst = worst.max(fd_nd(&|x| model.value(x), &grad, &points, 1e-6));
        count += 1;
    }

    // One-dimensional Witten potentials, including the glued interface potential.
    let prof_a = PProfile::new(16.0, 0.2).map_err(|e| e.to_string())?;
    let pots: Vec<(PotentialFn, f64, f64)> = vec![
        (cosine(1.0), 0.0, TAU),
        (cosine(2.0), 0.0, TAU),
        (cosine(3.0), 0.0, TAU),
        (potential(|s| [s * s * s / 3.0, s * s, 2.0 * s]), -1.0, 1.0),
        (glued_potential(cosine(2.0), prof_a, PI / 4.0, 5.0 * PI / 4.0, TAU), 0.0, TAU),
        (potential(move |s| prof_a.eval(s)), -0.5, 0.5),
    ];
    for (f, a, b) in pots {
        let samples: Vec<f64> = (0..2000).map(|_| rng.gen_range(a..b)).collect();
        worst = worst.max(fd_1d(&|s| f(s), &samples, 1e-7));
        count += 1;
    }
    Ok((worst, count))
}

fn susy_suite() -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (twist, t) in [(0.0, 4.0), (0.21, 10.0), (0.5, 25.0)] {
        let n = cells_for(TAU, t, 2.0);
        let p = WittenProblem1D::new(Topology::Circle { length: TAU, twist }, Boundary::None, 0, n, t, cosine(2.0))
            .map_err(|e| e.to_string())?;
        worst = worst.max(supersymmetry_defect(&p, 8));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_labels_have_the_expected_sizes() {
        assert_eq!(oracle_labels(3, 0).len(), 7);
        assert_eq!(oracle_labels(3, 1).len(), 8);
        assert_eq!(oracle_labels(3, -1).len(), 6);
        assert!(oracle_labels(3, 0).contains(&"bd(3)".to_string()));
    }

    #[test]
    fn corrupted_radius_fails_the_census() {
        let opts = VerifyOptions { census: CensusSetup { r2: 0.08, ..CensusSetup::default() } };
        let r = verify_one(1, &opts).unwrap();
        assert!(!r.passed);
        assert!(r.line().starts_with("FAIL  1 birth-death census"));
    }
}
