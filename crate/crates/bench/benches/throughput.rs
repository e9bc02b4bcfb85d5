use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use payband_bench::{fig1_instance, spd_matrix};
use payband_core::estimation::EstimatorState;
use payband_core::harness::Simulation;
use payband_core::linalg::solve_spd;
use payband_core::policies::{PolicyConfig, PolicyKind};
use payband_core::seed::RunSeeds;

fn linalg(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_spd");
    for d in [4, 14, 32] {
        let a = spd_matrix(d);
        let b: Vec<f64> = (0..d).map(|i| i as f64 / d as f64).collect();
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |bench, _| {
            bench.iter(|| solve_spd(black_box(&a), black_box(&b)).unwrap())
        });
    }
    g.finish();
}

fn estimation(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimate");
    for d in [4, 14] {
        let mut st = EstimatorState::ridge(0, d, 1.0);
        for k in 0..200 {
            let x: Vec<f64> = (0..d)
                .map(|i| ((k * 31 + i * 7) % 11) as f64 / 11.0 - 0.5)
                .collect();
            st.absorb(&x, (k % 5) as f64 / 5.0);
        }
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |bench, _| {
            bench.iter(|| black_box(&st).estimate().unwrap())
        });
    }
    g.finish();
}

fn fig1_run(c: &mut Criterion) {
    let inst = fig1_instance();
    let mut g = c.benchmark_group("fig1_run");
    g.sample_size(20);
    for kind in PolicyKind::ALL {
        let cfg = match kind {
            PolicyKind::CbChainedRestricted => PolicyConfig::new(kind).with_budget(5.0),
            _ => PolicyConfig::new(kind),
        };
        g.bench_function(kind.name(), |bench| {
            bench.iter(|| {
                Simulation::new(&inst, &cfg, None, RunSeeds::for_run(800, 0, 0))
                    .unwrap()
                    .run(0)
                    .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, linalg, estimation, fig1_run);
criterion_main!(benches);
