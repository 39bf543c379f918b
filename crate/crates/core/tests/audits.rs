use std::sync::Arc;

use approx::assert_relative_eq;
use dperm_core::analysis::{
    audit_dp, audit_pure_dp, stability_audit, stability_bound, DatasetFamily,
};
use dperm_core::hypothesis_space::{discretize_box, GridSpec};
use dperm_core::mechanisms::{
    amplify_pure, BitRevealingMixture, ErmMechanism, ExponentialMechanism, FixedLaw,
    SharedMechanism, SubsetSize, Subsampled, TwoStageSubsetSelection,
};
use dperm_core::problems::{
    BestSubsetRegression, DataPoint, SharedProblem, SparseSpace, ThresholdClassification,
};
use dperm_core::{Execution, FiniteHypothesisSpace};
use proptest::prelude::*;

fn grid(resolution: usize) -> Arc<FiniteHypothesisSpace> {
    Arc::new(discretize_box(&GridSpec::unit_interval(resolution)).unwrap())
}

fn threshold() -> SharedProblem {
    Arc::new(ThresholdClassification::new())
}

fn two_points() -> Vec<DataPoint> {
    vec![DataPoint::labeled(vec![0.3], 1.0), DataPoint::labeled(vec![0.7], 0.0)]
}

#[test]
fn input_ignoring_mechanism_has_zero_loss_and_zero_stability() {
    let m = FixedLaw::constant(grid(8), 3).unwrap();
    let universe = ThresholdClassification::universe(&[0.2, 0.8]);
    let family = DatasetFamily::exhaustive(&universe, 3).unwrap();
    let report = audit_pure_dp(&m, &family, Execution::Sequential).unwrap();
    assert_eq!(report.max_log_ratio, 0.0);
    assert_eq!(report.realized_delta_at_epsilon, 0.0);
    let stab = stability_audit(&m, threshold().as_ref(), &family, &universe, Execution::Sequential).unwrap();
    assert_eq!(stab.value, 0.0);
}

#[test]
fn erm_on_separating_pair_is_infinitely_leaky() {
    let m = ErmMechanism::new(threshold(), grid(8));
    let family = DatasetFamily::exhaustive(&two_points(), 1).unwrap();
    let report = audit_pure_dp(&m, &family, Execution::Sequential).unwrap();
    assert!(report.max_log_ratio.is_infinite());
    assert_eq!(report.realized_delta_at_epsilon, 1.0);
    assert!(report.witness.is_some());
}

#[test]
fn pure_mechanism_has_no_delta_at_its_epsilon() {
    let m = ExponentialMechanism::new(threshold(), grid(16), 1.0).unwrap();
    let family = DatasetFamily::exhaustive(&ThresholdClassification::universe(&[0.25, 0.75]), 3).unwrap();
    let report = audit_dp(&m, &family, 1.0, Execution::default()).unwrap();
    assert!(report.realized_delta_at_epsilon <= 1e-15);
}

#[test]
fn bit_revealing_mixture_leaks_exactly_delta() {
    let base: SharedMechanism = Arc::new(ExponentialMechanism::new(threshold(), grid(16), 1.0).unwrap());
    let mix = BitRevealingMixture::new(base, 0.01).unwrap();
    let family = DatasetFamily::exhaustive(&two_points(), 2).unwrap();
    let report = audit_dp(&mix, &family, 1.0, Execution::default()).unwrap();
    assert_relative_eq!(report.realized_delta_at_epsilon, 0.01, epsilon = 1e-12);
    assert!(report.max_log_ratio.is_infinite());
}

#[test]
fn stability_at_half_epsilon() {
    let m = ExponentialMechanism::new(threshold(), grid(32), 0.5).unwrap();
    let universe = ThresholdClassification::universe(&[0.1, 0.5, 0.9]);
    let family = DatasetFamily::exhaustive(&universe, 3).unwrap();
    let s = stability_audit(&m, threshold().as_ref(), &family, &universe, Execution::default()).unwrap();
    assert!(s.value > 0.0);
    assert!(s.value <= 0.648_721_270_700_128_2);
    assert!(s.value <= 1.0);
}

#[test]
fn subsampled_audit_stays_under_the_tight_bound() {
    for m in 1..=3 {
        let base: SharedMechanism = Arc::new(ExponentialMechanism::new(threshold(), grid(8), 1.5).unwrap());
        let sub = Subsampled::new(base, SubsetSize::Fixed(m));
        let family = DatasetFamily::exhaustive(&two_points(), 5).unwrap();
        let realized = audit_dp(&sub, &family, 1.5, Execution::default()).unwrap().max_log_ratio;
        let (tight, _) = amplify_pure(1.5, m as f64 / 5.0).unwrap();
        assert!(realized <= tight + 1e-9, "m={m}: {realized} > {tight}");
    }
}

#[test]
fn two_stage_selection_is_epsilon_private() {
    let p = Arc::new(BestSubsetRegression::new(3, 1, 0.1).unwrap());
    let sparse = Arc::new(SparseSpace::new(&p, 4).unwrap());
    let m = TwoStageSubsetSelection::new(p, sparse, 1.0).unwrap();
    let universe = vec![
        DataPoint::labeled(vec![0.9, 0.1, 0.4], 0.5),
        DataPoint::labeled(vec![0.2, 0.7, 0.3], -0.4),
        DataPoint::labeled(vec![0.5, 0.5, 0.9], 0.1),
    ];
    let family = DatasetFamily::exhaustive(&universe, 3).unwrap();
    let report = audit_pure_dp(&m, &family, Execution::default()).unwrap();
    assert!(report.max_log_ratio > 0.0);
    assert!(report.max_log_ratio <= 1.0 + 1e-9);
}

#[test]
fn random_family_pairs_are_neighbours() {
    let universe = ThresholdClassification::universe(&[0.2, 0.5, 0.8]);
    let family = DatasetFamily::random(&universe, 6, 50, 9).unwrap();
    assert_eq!(family.len(), 50);
    for &(i, j) in &family.pairs {
        let (a, b) = (&family.datasets[i], &family.datasets[j]);
        let differing = a.points().iter().zip(b.points()).filter(|(x, y)| x != y).count();
        assert_eq!(differing, 1);
    }
}

#[test]
fn exhaustive_family_counts() {
    // 2^3 datasets, each with 3 neighbours, counted once per pair
    let family = DatasetFamily::exhaustive(&two_points(), 3).unwrap();
    assert_eq!(family.datasets.len(), 8);
    assert_eq!(family.len(), 12);
    assert!(DatasetFamily::exhaustive(&two_points(), 21).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exponential_mechanism_never_exceeds_its_budget(
        resolution in 2usize..40,
        eps in 0.05f64..3.0,
        n in 1usize..4,
        xs in proptest::collection::vec(0.0f64..1.0, 1..3),
    ) {
        let m = ExponentialMechanism::new(threshold(), grid(resolution), eps).unwrap();
        let universe = ThresholdClassification::universe(&xs);
        let family = DatasetFamily::exhaustive(&universe, n).unwrap();
        let report = audit_pure_dp(&m, &family, Execution::Sequential).unwrap();
        prop_assert!(report.max_log_ratio <= eps + 1e-9);
        let s = stability_audit(&m, threshold().as_ref(), &family, &universe, Execution::Sequential).unwrap();
        prop_assert!(s.value <= stability_bound(eps) + 1e-9);
        if eps <= 1.0 {
            prop_assert!(s.value <= 2.0 * eps + 1e-9);
        }
    }

    #[test]
    fn sequential_and_parallel_audits_agree(eps in 0.1f64..2.0, n in 1usize..4) {
        let m = ExponentialMechanism::new(threshold(), grid(12), eps).unwrap();
        let family = DatasetFamily::exhaustive(&ThresholdClassification::universe(&[0.4, 0.6]), n).unwrap();
        let a = audit_pure_dp(&m, &family, Execution::Sequential).unwrap();
        let b = audit_pure_dp(&m, &family, Execution::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }
}
