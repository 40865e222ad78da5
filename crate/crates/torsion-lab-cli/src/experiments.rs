//! Experiment drivers. Each experiment is first turned into a validated
//! [`Plan`] (no numerics), then executed into a table and a JSON document.

use crate::config::{precondition, ConfigError, Experiment, ExperimentConfig};
use crate::output::{join, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;
use torsion_lab::birth_death::census::{expected_census, find_critical_points, separation_report};
use torsion_lab::birth_death::{Model, ModelParams};
use torsion_lab::graded_complex::random_complex;
use torsion_lab::linalg;
use torsion_lab::morse_complex::cheeger_muller::cheeger_muller_compare;
use torsion_lab::morse_complex::suspension::{ball_removed_ranks, gaussian_normalization_probe, suspend, BallPair};
use torsion_lab::morse_complex::{build_complex, wrap_angle, ManifoldModel, TrigSeries};
use torsion_lab::torsion_forms::{anomaly_check, holonomy_family, HolonomyFamilySpec, TorsionQuadrature};
use torsion_lab::witten1d::{agmon_scan, cosine, cubic_model_eigs, gluing_scan, small_eigenvalue_scan, GluingSetup};

/// Weights `exp(2 T range f)` must stay representable.
const EXP_BUDGET: f64 = 700.0;

#[derive(Debug, Clone)]
pub enum Plan {
    Torsion { complexes: usize, degrees: (usize, usize), max_rank: usize, random_metrics: bool, seed: u64 },
    Anomaly { spec: HolonomyFamilySpec, quadrature: TorsionQuadrature },
    BirthDeath { params: ModelParams, separation: bool },
    WittenGlue { setup: GluingSetup, wave: f64, amplitudes: Vec<f64> },
    SmallEig { wave: f64, ts: Vec<f64>, branch: usize },
    Agmon { wave: f64, ts: Vec<f64>, b: f64, radius: f64 },
    Cubic { ts: Vec<f64>, k: usize, n: usize },
    CheegerMuller { thetas: Vec<f64>, n_grid: usize },
    Suspension { n: usize, m: usize, c: f64, t: f64, t_prime: f64 },
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub json: serde_json::Value,
}

fn positive(cfg: &ExperimentConfig, key: &str) -> Result<f64, ConfigError> {
    let x = cfg.float(key)?;
    if !(x > 0.0) {
        return Err(precondition(key, format!("must be > 0, got {x}")));
    }
    Ok(x)
}

fn check_exp_budget(key: &str, t: f64, range: f64) -> Result<(), ConfigError> {
    if 2.0 * t * range > EXP_BUDGET {
        return Err(precondition(key, format!("2 T range(f) = {:.1} exceeds {EXP_BUDGET}", 2.0 * t * range)));
    }
    Ok(())
}

/// Validates every parameter of `cfg` against the module preconditions.
pub fn plan(cfg: &ExperimentConfig) -> Result<Plan, ConfigError> {
    Ok(match cfg.experiment {
        Experiment::Torsion => {
            let lo = cfg.count("min_degrees", 1, 8)?;
            let hi = cfg.count("max_degrees", 1, 8)?;
            if lo > hi {
                return Err(precondition("min_degrees", format!("must not exceed max_degrees = {hi}")));
            }
            Plan::Torsion {
                complexes: cfg.count("complexes", 1, 100_000)?,
                degrees: (lo, hi),
                max_rank: cfg.count("max_rank", 1, 12)?,
                random_metrics: cfg.boolean("random_metrics")?,
                seed: cfg.seed,
            }
        }
        Experiment::Anomaly => {
            let m = cfg.count("m", 8, 4096)?;
            let nodes = cfg.count("nodes", 2, 100_000)?;
            let tau = positive(cfg, "tau")?;
            let t_max = positive(cfg, "t_max")?;
            if tau >= t_max {
                return Err(precondition("tau", format!("must be below t_max = {t_max}")));
            }
            let spec = HolonomyFamilySpec {
                m,
                a: positive(cfg, "a")?,
                b: positive(cfg, "b")?,
                phases: [cfg.float("alpha")?, cfg.float("beta")?, cfg.float("gamma")?],
                amplitude: cfg.float("amplitude")?,
                gauge: cfg.boolean("gauge")?,
                seed: cfg.seed,
            };
            if !(spec.amplitude.abs() < 1.0) {
                return Err(precondition("amplitude", "metric modulation must lie in (-1, 1)"));
            }
            let mut quadrature = TorsionQuadrature::new(tau, t_max);
            quadrature.nodes = nodes;
            Plan::Anomaly { spec, quadrature }
        }
        Experiment::BirthDeath => {
            let n = cfg.count("n", 3, 64)?;
            let i = cfg.count("i", 2, 63)?;
            let params = ModelParams::new(
                n,
                i,
                cfg.float("r1")?,
                cfg.float("r2")?,
                cfg.float("delta")?,
                cfg.float("y")?,
                cfg.float("A")?,
            )
            .map_err(|e| precondition("birth-death", e.to_string()))?;
            Plan::BirthDeath { params, separation: cfg.boolean("separation")? }
        }
        Experiment::WittenGlue => {
            let setup = GluingSetup {
                t: positive(cfg, "t")?,
                r: positive(cfg, "r")?,
                y_a: cfg.float("y_a")?,
                y_b: cfg.float("y_b")?,
                k: cfg.count("k", 1, 64)?,
                f_slope: positive(cfg, "wave")?,
            };
            let amplitudes = cfg.floats("amplitudes")?;
            if let Some(a) = amplitudes.iter().find(|a| !(**a >= 0.0)) {
                return Err(precondition("amplitudes", format!("must be >= 0, got {a}")));
            }
            let (gap_in, gap_out) = (setup.y_b - setup.y_a, 2.0 * PI - (setup.y_b - setup.y_a));
            if !(gap_in > 4.0 * setup.r && gap_out > 4.0 * setup.r) {
                return Err(precondition("y_a", "need y_a < y_b with both arcs longer than 4r"));
            }
            let a_max = amplitudes.iter().cloned().fold(0.0, f64::max);
            check_exp_budget("t", setup.t, 2.0 + a_max * setup.r * setup.r)?;
            Plan::WittenGlue { wave: setup.f_slope, setup, amplitudes }
        }
        Experiment::SmallEig => {
            let wave = positive(cfg, "wave")?;
            let (lo, hi, step) = (positive(cfg, "t_min")?, positive(cfg, "t_max")?, positive(cfg, "t_step")?);
            if hi <= lo {
                return Err(precondition("t_max", format!("must exceed t_min = {lo}")));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 1000 {
                return Err(precondition("t_step", "ladder longer than 1000 rungs"));
            }
            check_exp_budget("t_max", hi, 2.0)?;
            let ts = (0..count).map(|j| lo + step * j as f64).collect();
            Plan::SmallEig { wave, ts, branch: cfg.count("branch", 0, 64)? }
        }
        Experiment::Agmon => {
            let ts = cfg.floats("ts")?;
            if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
                return Err(precondition("ts", format!("must be > 0, got {t}")));
            }
            check_exp_budget("ts", ts.iter().cloned().fold(0.0, f64::max), 2.0)?;
            let b = cfg.float("b")?;
            if !(b > 0.0 && b < 1.0) {
                return Err(precondition("b", format!("must lie in (0, 1), got {b}")));
            }
            Plan::Agmon { wave: positive(cfg, "wave")?, ts, b, radius: positive(cfg, "radius")? }
        }
        Experiment::Cubic => {
            let ts = cfg.floats("ts")?;
            if let Some(t) = ts.iter().find(|t| !(**t >= 1.0)) {
                return Err(precondition("ts", format!("must be >= 1, got {t}")));
            }
            let n = cfg.count("n", 3, 200_000)?;
            let k = cfg.count("k", 1, n)?;
            Plan::Cubic { ts, k, n }
        }
        Experiment::CheegerMuller => {
            let thetas = cfg.floats("theta")?;
            if let Some(t) = thetas.iter().find(|t| wrap_angle(**t).abs() < 1e-8) {
                return Err(precondition("theta", format!("{t} is a multiple of 2 pi; the twisted circle is not acyclic")));
            }
            Plan::CheegerMuller { thetas, n_grid: cfg.count("n_grid", 16, 1_000_000)? }
        }
        Experiment::Suspension => {
            let n = cfg.count("n", 2, 16)?;
            if n % 2 != 0 {
                return Err(precondition("n", format!("must be even, got {n}")));
            }
            let c = cfg.float("c")?;
            if c == 0.0 {
                return Err(precondition("c", "must be nonzero"));
            }
            Plan::Suspension {
                n,
                m: cfg.count("m", 1, 16)?,
                c,
                t: positive(cfg, "t")?,
                t_prime: positive(cfg, "t_prime")?,
            }
        }
    })
}

fn numeric(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Runs a validated plan. Errors carry the module error message verbatim.
pub fn execute(plan: &Plan) -> Result<Outcome, String> {
    match plan {
        Plan::Torsion { complexes, degrees, max_rank, random_metrics, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut table = Table::new(&["complex", "ranks", "betti", "chi", "torsion", "torsion_heat", "d_squared_defect"]);
            let mut worst: f64 = 0.0;
            for j in 0..*complexes {
                let len = rng.gen_range(degrees.0..=degrees.1);
                let ranks: Vec<usize> = (0..len).map(|_| rng.gen_range(1..=*max_rank)).collect();
                let (cx, betti) = random_complex(&mut rng, &ranks, *random_metrics);
                let defect = (0..len.saturating_sub(2))
                    .map(|k| linalg::frob(&(cx.differential(k + 1) * cx.differential(k))))
                    .fold(0.0, f64::max);
                worst = worst.max(defect);
                let torsion = cx.finite_torsion().map_err(numeric)?;
                let heat = cx.torsion_integral().map_err(numeric)?;
                table.push(vec![
                    j.into(),
                    join(&ranks).into(),
                    join(&betti).into(),
                    cx.euler().chi.into(),
                    torsion.into(),
                    heat.into(),
                    defect.into(),
                ]);
            }
            Ok(Outcome { table, json: json!({ "complexes": complexes, "max_d_squared_defect": worst }) })
        }
        Plan::Anomaly { spec, quadrature } => {
            let (fam, metric) = holonomy_family(spec).map_err(numeric)?;
            let rep = anomaly_check(&fam, &metric, quadrature).map_err(numeric)?;
            let mut table = Table::new(&["edge", "d_torsion", "h_a", "h_harmonic", "residual"]);
            for e in 0..rep.residuals.len() {
                table.push(vec![e.into(), rep.d_torsion[e].into(), rep.h_a[e].into(), rep.h_harmonic[e].into(), rep.residuals[e].into()]);
            }
            let json = json!({
                "family": spec,
                "tau": quadrature.tau,
                "t_max": quadrature.t_max,
                "nodes": quadrature.nodes,
                "max_residual": rep.max_residual,
            });
            Ok(Outcome { table, json })
        }
        Plan::BirthDeath { params, separation } => {
            let census = find_critical_points(&Model::new(*params).map_err(numeric)?);
            let (expected_count, expected_labels) = expected_census(params);
            let mut table = Table::new(&["point", "label", "radius", "value", "u0", "u1", "min_abs_hessian", "newton_residual"]);
            for (j, c) in census.points.iter().enumerate() {
                let min_abs = c.hessian_spectrum.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
                table.push(vec![
                    j.into(),
                    c.kind.label().into(),
                    c.radius().into(),
                    c.value.into(),
                    c.location[0].into(),
                    c.location[1].into(),
                    min_abs.into(),
                    c.newton_residual.into(),
                ]);
            }
            let sep = if *separation { Some(separation_report(params).map_err(numeric)?) } else { None };
            let json = json!({
                "params": params,
                "count": census.points.len(),
                "labels": census.labels(),
                "expected_count": expected_count,
                "expected_labels": expected_labels,
                "failed_shells": census.failed_shells,
                "max_residual": census.max_residual(),
                "points": census.points,
                "separation": sep,
            });
            Ok(Outcome { table, json })
        }
        Plan::WittenGlue { setup, wave, amplitudes } => {
            let rep = gluing_scan(cosine(*wave), setup, amplitudes).map_err(numeric)?;
            let mut table = Table::new(&["amplitude", "k", "circle", "split", "gap", "small_count"]);
            for row in &rep.rows {
                for (k, (lam, split)) in row.circle.iter().zip(&rep.split).enumerate() {
                    table.push(vec![row.amplitude.into(), k.into(), (*lam).into(), (*split).into(), row.gaps[k].into(), row.small_count.into()]);
                }
            }
            Ok(Outcome { table, json: serde_json::to_value(&rep).map_err(numeric)? })
        }
        Plan::SmallEig { wave, ts, branch } => {
            let fit = small_eigenvalue_scan(cosine(*wave), *wave, ts, *branch).map_err(numeric)?;
            let mut table = Table::new(&["t", "eigenvalue", "log_eigenvalue"]);
            for (t, l) in fit.ts.iter().zip(&fit.eigenvalues) {
                table.push(vec![(*t).into(), (*l).into(), l.ln().into()]);
            }
            let rel = (fit.slope - fit.prediction).abs() / fit.prediction.abs();
            let mut json = serde_json::to_value(&fit).map_err(numeric)?;
            json["relative_error"] = json!(rel);
            Ok(Outcome { table, json })
        }
        Plan::Agmon { wave, ts, b, radius } => {
            let rows = agmon_scan(cosine(*wave), *wave, ts, *b, *radius).map_err(numeric)?;
            let mut table = Table::new(&["t", "eigenvalue", "sup", "c_f", "threshold"]);
            for r in &rows {
                table.push(vec![r.t.into(), r.eigenvalue.into(), r.decay.sup.into(), r.decay.c_f.into(), r.decay.threshold.into()]);
            }
            let sups: Vec<f64> = rows.iter().map(|r| r.decay.sup).collect();
            let spread = sups.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - sups.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(Outcome { table, json: json!({ "b": b, "radius": radius, "rows": rows, "spread": spread }) })
        }
        Plan::Cubic { ts, k, n } => {
            let mut table = Table::new(&["t", "k", "eigenvalue", "scaled"]);
            let mut ladders = Vec::new();
            for &t in ts {
                let ev = cubic_model_eigs(t, *k, *n).map_err(numeric)?;
                for (j, l) in ev.iter().enumerate() {
                    table.push(vec![t.into(), j.into(), (*l).into(), (l / t.powf(2.0 / 3.0)).into()]);
                }
                ladders.push(json!({ "t": t, "eigenvalues": ev }));
            }
            Ok(Outcome { table, json: json!({ "n": n, "ladders": ladders }) })
        }
        Plan::CheegerMuller { thetas, n_grid } => {
            let mut table = Table::new(&["theta", "comb", "exact", "fem", "gap_exact", "gap_fem", "n_grid", "matched"]);
            let mut rows = Vec::new();
            for &theta in thetas {
                let r = cheeger_muller_compare(theta, *n_grid).map_err(numeric)?;
                table.push(vec![
                    r.theta.into(),
                    r.combinatorial.into(),
                    r.analytic_exact.into(),
                    r.analytic_fem.into(),
                    r.gap_exact.into(),
                    r.gap_fem.into(),
                    r.n_grid.into(),
                    r.matched.into(),
                ]);
                rows.push(r);
            }
            Ok(Outcome { table, json: json!({ "rows": rows }) })
        }
        Plan::Suspension { n, m, c, t, t_prime } => {
            let base = build_complex(&ManifoldModel::circle(TrigSeries::cosine(1), linalg::eye(*m)).map_err(numeric)?)
                .map_err(numeric)?
                .complex;
            let with = ball_removed_ranks(&base, *m, *n, Some(BallPair { degree: *n, c: *c })).map_err(numeric)?;
            let without = ball_removed_ranks(&base, *m, *n, None).map_err(numeric)?;
            let mut table = Table::new(&["case", "degree", "computed", "expected"]);
            for (case, tab) in [("ball_removed", &with), ("plain", &without)] {
                for (l, (a, b)) in tab.computed.iter().zip(&tab.expected).enumerate() {
                    table.push(vec![case.into(), l.into(), (*a).into(), (*b).into()]);
                }
            }
            let s = suspend(&base, *n, *t).map_err(numeric)?;
            let probe = gaussian_normalization_probe(*n, *t, *t_prime).map_err(numeric)?;
            let json = json!({
                "n": n,
                "m": m,
                "ranks_match": with.matches() && without.matches(),
                "euler": s.euler(),
                "predicted_euler": s.predicted_euler(),
                "torsion_shift": s.torsion_shift,
                "gaussian_probe": probe,
            });
            Ok(Outcome { table, json })
        }
    }
}

