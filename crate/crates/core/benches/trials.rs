use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dperm_core::analysis::{audit_pure_dp, consistency_suite, ConsistencyMode, DatasetFamily};
use dperm_core::hypothesis_space::{discretize_box, GridSpec};
use dperm_core::mechanisms::ExponentialMechanism;
use dperm_core::problems::{DataDistribution, ThresholdClassification};
use dperm_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn mechanism() -> (Arc<ThresholdClassification>, ExponentialMechanism) {
    let problem = Arc::new(ThresholdClassification::new());
    let space = Arc::new(discretize_box(&GridSpec::unit_interval(256)).unwrap());
    let m = ExponentialMechanism::new(problem.clone(), space, 1.0).unwrap();
    (problem, m)
}

fn exhaustive_audit(c: &mut Criterion) {
    let (_, m) = mechanism();
    let universe = ThresholdClassification::universe(&[0.2, 0.5, 0.8]);
    let family = DatasetFamily::exhaustive(&universe, 5).unwrap();
    let mut group = c.benchmark_group("exhaustive_audit");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| audit_pure_dp(&m, &family, exec).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo_trials(c: &mut Criterion) {
    let (problem, m) = mechanism();
    let dist = DataDistribution::LabeledThreshold { theta: 0.3, flip: 0.1 };
    let mut group = c.benchmark_group("monte_carlo_consistency");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                let mode = ConsistencyMode::MonteCarlo { trials: 200, seed: 1 };
                consistency_suite(&m, problem.as_ref(), &dist, 100, mode, exec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, exhaustive_audit, monte_carlo_trials);
criterion_main!(benches);
