use dperm_core::hypothesis_space::{discretize_box, estimate_sublevel_condition, GridSpec, Payload};
use dperm_core::problems::{DataDistribution, DataPoint, FiniteSupportEstimation, PthPowerMean};
use dperm_core::{Execution, FiniteHypothesisSpace};

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

#[test]
fn finite_space_has_bounded_ratio_and_no_growth() {
    let problem = FiniteSupportEstimation::new(6, 2).unwrap();
    let space = problem.space().unwrap();
    let dist = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
    };
    // below the 1/n resolution of empirical risks the sublevel set is the argmin set
    let t = log_grid(1e-4, 1e-2, 6);
    let fit = estimate_sublevel_condition(&problem, &dist, &space, 50, &t, 40, 5, Execution::default()).unwrap();
    for row in &fit.table {
        assert!(row.mean_ratio <= space.len() as f64);
    }
    assert!(fit.k_hat <= space.len() as f64 + 1e-9);
    assert!(fit.rho_hat.abs() < 1e-9, "rho_hat = {}", fit.rho_hat);
}

#[test]
fn one_dimensional_lipschitz_objective_has_rho_one() {
    // F(h) = |h - 0.3| on a fine grid: the t-sublevel set has length 2t
    let problem = PthPowerMean::new(1.0).unwrap();
    let space = discretize_box(&GridSpec::unit_interval(100_000)).unwrap();
    let dist = DataDistribution::discrete_uniform(vec![DataPoint::unlabeled(vec![0.3])]).unwrap();
    let t = log_grid(1e-3, 1e-1, 8);
    let fit = estimate_sublevel_condition(&problem, &dist, &space, 5, &t, 2, 1, Execution::default()).unwrap();
    assert!((fit.rho_hat - 1.0).abs() < 0.02, "rho_hat = {}", fit.rho_hat);
    assert!((fit.k_hat - 0.5).abs() < 0.05, "k_hat = {}", fit.k_hat);
}

#[test]
fn singleton_space_has_unit_ratio() {
    let problem = PthPowerMean::new(2.0).unwrap();
    let space = FiniteHypothesisSpace::new(vec![Payload::Vector(vec![0.4])]).unwrap();
    let dist = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
    };
    let fit = estimate_sublevel_condition(&problem, &dist, &space, 10, &[0.01, 0.1, 1.0], 5, 2, Execution::default()).unwrap();
    assert!(fit.table.iter().all(|r| r.mean_ratio == 1.0));
    assert_eq!(fit.k_hat, 1.0);
    assert_eq!(fit.rho_hat, 0.0);
}

#[test]
fn bad_t_grid_is_rejected() {
    let problem = PthPowerMean::new(2.0).unwrap();
    let space = discretize_box(&GridSpec::unit_interval(4)).unwrap();
    let dist = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
    };
    let run = |t: &[f64]| estimate_sublevel_condition(&problem, &dist, &space, 5, t, 3, 0, Execution::Sequential);
    assert!(run(&[]).is_err());
    assert!(run(&[0.1, 0.05]).is_err());
    assert!(run(&[0.0, 0.1]).is_err());
}
