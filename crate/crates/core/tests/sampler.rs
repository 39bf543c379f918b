use std::sync::Arc;

use dperm_core::mechanisms::MetropolisSampler;
use dperm_core::problems::{DataDistribution, PthPowerMean, SharedProblem};
use dperm_core::rng::rng_from_seed;
use dperm_core::stats::{ks_critical_1pct, ks_uniform_statistic, MeanEstimate};

/// Mean of `exp(-(eps n / 4) mean_i (x_i - h)^2)` on [0, 1] by the midpoint rule.
fn quadrature_mean(xs: &[f64], eps: f64) -> f64 {
    let scale = eps * xs.len() as f64 / 4.0;
    let cells = 200_000;
    let (mut mass, mut first) = (0.0, 0.0);
    for k in 0..cells {
        let h = (k as f64 + 0.5) / cells as f64;
        let f = xs.iter().map(|x| (x - h).powi(2)).sum::<f64>() / xs.len() as f64;
        let w = (-scale * f).exp();
        mass += w;
        first += w * h;
    }
    first / mass
}

#[test]
fn chain_mean_matches_quadrature() {
    let problem: SharedProblem = Arc::new(PthPowerMean::new(2.0).unwrap());
    let z = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![0.6],
    }
    .sample_dataset(40, &mut rng_from_seed(21))
    .unwrap();
    let xs: Vec<f64> = z.points().iter().map(|p| p.x0()).collect();
    let target = quadrature_mean(&xs, 2.0);
    let chain = MetropolisSampler::new(problem, vec![0.0], vec![1.0], 2.0, 400_000)
        .unwrap()
        .with_burn_in(5_000)
        .run_chain(&z, 3)
        .unwrap();
    // batch means absorb the autocorrelation
    let batch = 5_000;
    let means: Vec<f64> = chain
        .samples
        .chunks_exact(batch)
        .map(|c| c.iter().map(|s| s[0]).sum::<f64>() / batch as f64)
        .collect();
    let est = MeanEstimate::from_samples(&means);
    assert!(
        (est.mean - target).abs() <= 3.0 * est.stderr,
        "chain {} vs quadrature {target} (se {})",
        est.mean,
        est.stderr
    );
}

#[test]
fn zero_epsilon_chain_is_uniform_after_thinning() {
    let problem: SharedProblem = Arc::new(PthPowerMean::new(2.0).unwrap());
    let z = DataDistribution::UniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
    }
    .sample_dataset(10, &mut rng_from_seed(1))
    .unwrap();
    let chain = MetropolisSampler::new(problem, vec![0.0], vec![1.0], 0.0, 200_000)
        .unwrap()
        .with_step_size(0.5)
        .run_chain(&z, 8)
        .unwrap();
    let thinned: Vec<f64> = chain.samples.iter().step_by(100).map(|s| s[0]).collect();
    let d = ks_uniform_statistic(&thinned, 0.0, 1.0);
    assert!(d < ks_critical_1pct(thinned.len()), "KS {d}");
}
