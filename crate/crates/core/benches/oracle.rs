use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cycle_integrals::counting::{count_tangential_zeros, run_sharpness_experiment, ExperimentKind, ExperimentSpec};
use cycle_integrals::cycle::Cycle;
use cycle_integrals::exec::ExecMode;
use cycle_integrals::melnikov::Instance;
use cycle_integrals::oracle::SolverConfig;
use cycle_integrals::poly::RatPoly;
use std::hint::black_box;

fn config(exec: ExecMode) -> SolverConfig {
    SolverConfig {
        exec,
        ..SolverConfig::default()
    }
}

const MODES: [(&str, ExecMode); 2] = [("parallel", ExecMode::Parallel), ("sequential", ExecMode::Sequential)];

fn tangential(c: &mut Criterion) {
    let inst = Instance::new(
        RatPoly::from_ints(&[1, -3, 0, 2, 1]),
        RatPoly::from_ints(&[0, 2, -1, 3, 0, 1]),
        Cycle::new(vec![3, -1, -4, 2]).unwrap(),
        None,
    )
    .unwrap();
    let mut group = c.benchmark_group("tangential_m4_n5");
    for (name, mode) in MODES {
        let cfg = config(mode);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| count_tangential_zeros(black_box(&inst), &cfg).unwrap())
        });
    }
    group.finish();
}

fn experiment(c: &mut Criterion) {
    let spec = ExperimentSpec {
        m: 3,
        n: 4,
        kind: ExperimentKind::Tangential,
        trials: 8,
        seed: 1,
        simple: false,
        epsilon: "1/100".into(),
    };
    let mut group = c.benchmark_group("experiment_m3_n4_x8");
    group.sample_size(10);
    for (name, mode) in MODES {
        let cfg = config(mode);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sharpness_experiment(black_box(&spec), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, tangential, experiment);
criterion_main!(benches);
