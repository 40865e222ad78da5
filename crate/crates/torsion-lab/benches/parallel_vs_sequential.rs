//! Pool against single worker on three data-parallel kernels. Build with
//! `--no-default-features --features sequential` to compare against the
//! build without rayon, where both arms run on the calling thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use torsion_lab::birth_death::probes::radial_derivative_check;
use torsion_lab::birth_death::{Model, ModelParams};
use torsion_lab::linalg;
use torsion_lab::morse_complex::{fiber_criticals, ManifoldModel, TrigSeries};
use torsion_lab::par;
use torsion_lab::torsion_forms::{anomaly_check, holonomy_family, HolonomyFamilySpec, TorsionQuadrature};

fn arms<R: Send>(c: &mut Criterion, name: &str, work: impl Fn() -> R + Sync + Send) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("pool", par::is_parallel()), |b| b.iter(&work));
    group.bench_function(BenchmarkId::new("single", 1), |b| b.iter(|| par::with_threads(1, &work)));
    group.finish();
}

fn torus_criticals(c: &mut Criterion) {
    let model = ManifoldModel::torus(
        TrigSeries { terms: vec![(1, 1.0, 0.0), (2, 0.2, 0.1)] },
        TrigSeries::cosine(1),
        linalg::eye(1),
        linalg::eye(1),
    )
    .unwrap();
    arms(c, "torus_critical_points", || fiber_criticals(&model).unwrap().len());
}

fn anomaly(c: &mut Criterion) {
    let (fam, metric) = holonomy_family(&HolonomyFamilySpec::default()).unwrap();
    let q = TorsionQuadrature::new(1e-3, 400.0);
    arms(c, "anomaly_check_m64", || anomaly_check(&fam, &metric, &q).unwrap().max_residual);
}

fn radial(c: &mut Criterion) {
    let model = Model::new(ModelParams::census_default(0.0)).unwrap();
    arms(c, "radial_derivative_20k", || radial_derivative_check(&model, 20_000, 1).unwrap().min_derivative);
}

criterion_group!(benches, torus_criticals, anomaly, radial);
criterion_main!(benches);
