use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use probetest::adaptive::AdaptiveProblem;
use probetest::optim::{proj_l1_ball, PdpsConfig};
use probetest::spectral::{periodic_fourier, PeriodicGrid};
use probetest::{GridFunction, Scenario, ScenarioKind};

fn scenario(kind: ScenarioKind) -> Scenario {
    Scenario::new(kind, 2.0, 5.0 / 128.0, 1.0, 0.51).unwrap()
}

fn fourier(c: &mut Criterion) {
    let g = PeriodicGrid::default();
    let f = GridFunction::from_fn(g, |x| (3.0 * x).sin() + x * x).unwrap();
    c.bench_function("periodic_fourier_1024", |b| b.iter(|| periodic_fourier(black_box(&f))));
}

fn projection(c: &mut Criterion) {
    let v: Vec<f64> = (0..1024).map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0).collect();
    c.bench_function("proj_l1_ball_1024", |b| b.iter(|| proj_l1_ball(black_box(&v), 100.0)));
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("pdps_noisy");
    group.sample_size(10);
    for kind in [ScenarioKind::CompatibleSmooth, ScenarioKind::IncompatibleSmooth] {
        let problem = AdaptiveProblem::new(scenario(kind), PeriodicGrid::default(), PdpsConfig::default()).unwrap();
        let y = problem.sample(1e-3, 1, 0).unwrap();
        group.bench_function(kind.label(), |b| b.iter(|| problem.solver().solve(black_box(&y)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, fourier, projection, solve);
criterion_main!(benches);
