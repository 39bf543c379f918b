use std::sync::Arc;

use dperm_core::analysis::{consistency_suite, ConsistencyMode, FALLBACK_TRIALS};
use dperm_core::hypothesis_space::{discretize_box, GridSpec};
use dperm_core::mechanisms::{ExponentialMechanism, FixedLaw};
use dperm_core::problems::{
    population_risk, population_risks, DataDistribution, DataPoint, FiniteSupportEstimation,
    RiskMode, ThresholdClassification,
};
use dperm_core::{Execution, Payload};

fn two_point() -> DataDistribution {
    DataDistribution::discrete(
        vec![DataPoint::labeled(vec![0.25], 1.0), DataPoint::labeled(vec![0.75], 0.0)],
        vec![0.4, 0.6],
    )
    .unwrap()
}

fn em(eps: f64) -> ExponentialMechanism {
    let space = Arc::new(discretize_box(&GridSpec::unit_interval(8)).unwrap());
    ExponentialMechanism::new(Arc::new(ThresholdClassification::new()), space, eps).unwrap()
}

#[test]
fn monte_carlo_population_risk_matches_exact() {
    let dist = DataDistribution::discrete(
        vec![
            DataPoint::labeled(vec![0.1], 0.0),
            DataPoint::labeled(vec![0.45], 1.0),
            DataPoint::labeled(vec![0.6], 0.0),
            DataPoint::labeled(vec![0.9], 1.0),
        ],
        vec![0.1, 0.3, 0.2, 0.4],
    )
    .unwrap();
    let problem = ThresholdClassification::new();
    for tau in [0.05, 0.3, 0.5, 0.7, 0.95] {
        let h = Payload::Vector(vec![tau]);
        let exact = population_risk(&problem, &dist, &h, RiskMode::Exact).unwrap();
        assert_eq!(exact.stderr, 0.0);
        let mc = population_risk(&problem, &dist, &h, RiskMode::MonteCarlo { samples: 20_000, seed: 4 }).unwrap();
        assert!(
            (mc.mean - exact.mean).abs() <= 4.0 * mc.stderr,
            "tau={tau}: {} vs {} (se {})",
            mc.mean,
            exact.mean,
            mc.stderr
        );
    }
}

#[test]
fn single_sample_monte_carlo_risk_is_an_error() {
    let problem = ThresholdClassification::new();
    let h = Payload::Vector(vec![0.5]);
    let r = population_risk(&problem, &two_point(), &h, RiskMode::MonteCarlo { samples: 1, seed: 0 });
    assert!(r.unwrap_err().to_string().contains("at least 2 samples"));
}

#[test]
fn exact_decomposition_on_eight_datasets() {
    let m = em(1.0);
    let r = consistency_suite(&m, &ThresholdClassification::new(), &two_point(), 3, ConsistencyMode::Exact, Execution::default()).unwrap();
    assert!(r.note.is_none());
    assert!((r.optimal_risk - 0.4).abs() < 1e-12);
    assert!(r.decomposition_holds);
    assert!(r.generalization_holds);
    assert!(r.excess_risk.value <= r.stability_gap + r.aerm_gap.value + 1e-9);
    assert!(r.stability_gap <= r.stability_bound);
}

#[test]
fn exact_and_monte_carlo_agree_at_n_three() {
    let m = em(1.0);
    let problem = ThresholdClassification::new();
    let exact = consistency_suite(&m, &problem, &two_point(), 3, ConsistencyMode::Exact, Execution::default()).unwrap();
    let mc = consistency_suite(
        &m,
        &problem,
        &two_point(),
        3,
        ConsistencyMode::MonteCarlo { trials: 4000, seed: 8 },
        Execution::default(),
    )
    .unwrap();
    for (a, b) in [
        (exact.excess_risk, mc.excess_risk),
        (exact.aerm_gap, mc.aerm_gap),
        (exact.generalization_gap, mc.generalization_gap),
    ] {
        assert!((a.value - b.value).abs() <= 4.0 * b.stderr, "{} vs {} ± {}", a.value, b.value, b.stderr);
    }
}

#[test]
fn optimal_fixed_output_has_no_excess_risk() {
    let space = Arc::new(discretize_box(&GridSpec::unit_interval(8)).unwrap());
    let problem = ThresholdClassification::new();
    let risks = population_risks(&problem, &two_point(), &space).unwrap();
    let best = dperm_core::problems::argmin(&risks);
    let m = FixedLaw::constant(space, best).unwrap();
    let r = consistency_suite(&m, &problem, &two_point(), 3, ConsistencyMode::Exact, Execution::Sequential).unwrap();
    assert!(r.excess_risk.value.abs() < 1e-12);
    assert_eq!(r.stability_gap, 0.0);
}

#[test]
fn oversized_exact_request_falls_back_to_monte_carlo() {
    let m = em(1.0);
    let r = consistency_suite(&m, &ThresholdClassification::new(), &two_point(), 25, ConsistencyMode::Exact, Execution::default()).unwrap();
    assert!(matches!(r.mode, ConsistencyMode::MonteCarlo { trials, .. } if trials == FALLBACK_TRIALS));
    assert!(r.note.as_deref().unwrap().contains("Monte Carlo"));
}

#[test]
fn decomposition_holds_on_finite_support_problem() {
    let problem = Arc::new(FiniteSupportEstimation::new(4, 2).unwrap());
    let space = Arc::new(problem.space().unwrap());
    let dist = DataDistribution::discrete(
        vec![
            DataPoint::unlabeled(vec![0.1]),
            DataPoint::unlabeled(vec![0.4]),
            DataPoint::unlabeled(vec![0.9]),
        ],
        vec![0.5, 0.3, 0.2],
    )
    .unwrap();
    let m = ExponentialMechanism::new(problem.clone(), space, 0.5).unwrap();
    for n in [2, 4] {
        let r = consistency_suite(&m, problem.as_ref(), &dist, n, ConsistencyMode::Exact, Execution::default()).unwrap();
        assert!(r.decomposition_holds && r.generalization_holds, "n={n}: {r:?}");
    }
}

#[test]
fn continuous_distribution_is_rejected() {
    let dist = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
    };
    assert!(consistency_suite(&em(1.0), &ThresholdClassification::new(), &dist, 3, ConsistencyMode::Exact, Execution::Sequential).is_err());
}
