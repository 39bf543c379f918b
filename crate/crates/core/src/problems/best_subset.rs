use itertools::Itertools;

use super::distribution::dot;
use super::finite_support::binomial;
use super::{ridge_sqrt, DataPoint, Domain, LabelKind, Problem};
use crate::error::{invalid, Error, Result};
use crate::hypothesis_space::{grid_points, FiniteHypothesisSpace, GridSpec, Payload};

/// Sparse linear regression on `[0,1]^d` features with responses in
/// `[-1, 1]`, hypotheses `s`-sparse inside the unit ball.
///
/// Loss `|y - <h, x>/sqrt(d)| / 2` lies in `[0, 1]` and is
/// `1/2`-Lipschitz in `h`; the regularizer is `lambda |h|^2 / sqrt(n)`.
#[derive(Debug, Clone)]
pub struct BestSubsetRegression {
    d: usize,
    s: usize,
    lambda: f64,
    domain: Domain,
}

/// Default cap on the number of supports `C(d, s)`.
pub const SUPPORT_CAP: u64 = 10_000;

impl BestSubsetRegression {
    pub fn new(d: usize, s: usize, lambda: f64) -> Result<Self> {
        if d == 0 || s == 0 || s > d {
            return Err(invalid("need 1 <= s <= d"));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda must be finite and nonnegative"));
        }
        Ok(Self {
            d,
            s,
            lambda,
            domain: Domain {
                lower: vec![0.0; d],
                upper: vec![1.0; d],
                label: LabelKind::Real {
                    lower: -1.0,
                    upper: 1.0,
                },
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sparsity(&self) -> usize {
        self.s
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Problem for BestSubsetRegression {
    fn name(&self) -> &str {
        "best_subset_regression"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn loss(&self, h: &Payload, z: &DataPoint) -> f64 {
        let w = h.as_vector().expect("regression hypotheses are vectors");
        let y = z.label.expect("regression data carries a response");
        let pred = dot(w, &z.x) / (self.d as f64).sqrt();
        ((y - pred).abs() / 2.0).min(1.0)
    }

    fn regularizer(&self, n: usize, h: &Payload) -> f64 {
        ridge_sqrt(self.lambda, n, h.as_vector().unwrap_or(&[]))
    }

    fn zeta(&self, n: usize) -> f64 {
        self.lambda / (n as f64).sqrt()
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(0.5)
    }
}

/// Hypothesis space of an `s`-sparse problem, organised by support.
///
/// Each support `S` (a sorted `s`-subset of coordinates) carries the cell
/// centers of `[-1, 1]^s` at the given resolution that lie in the unit
/// ball, embedded into `R^d`.
#[derive(Debug, Clone)]
pub struct SparseSpace {
    pub supports: Vec<Vec<usize>>,
    pub per_support: Vec<FiniteHypothesisSpace>,
    pub union: FiniteHypothesisSpace,
    /// For each hypothesis of `union`, the index of its support.
    pub support_of: Vec<usize>,
}

impl SparseSpace {
    pub fn new(problem: &BestSubsetRegression, resolution: usize) -> Result<Self> {
        Self::with_cap(problem, resolution, SUPPORT_CAP)
    }

    pub fn with_cap(problem: &BestSubsetRegression, resolution: usize, cap: u64) -> Result<Self> {
        let (d, s) = (problem.d, problem.s);
        let count = binomial(d, s);
        if count > cap as f64 {
            return Err(Error::SizeLimit {
                what: "supports".into(),
                requested: count,
                cap: cap as f64,
            });
        }
        let grid = GridSpec::new(vec![-1.0; s], vec![1.0; s], vec![resolution; s])?;
        let local: Vec<Vec<f64>> = grid_points(&grid, crate::hypothesis_space::DEFAULT_GRID_CAP)?
            .into_iter()
            .filter(|p| p.iter().map(|v| v * v).sum::<f64>() <= 1.0)
            .collect();
        if local.is_empty() {
            return Err(invalid("no grid point falls inside the unit ball"));
        }
        let supports: Vec<Vec<usize>> = (0..d).combinations(s).collect();
        let mut per_support = Vec::with_capacity(supports.len());
        let mut all = Vec::new();
        let mut support_of = Vec::new();
        for (k, support) in supports.iter().enumerate() {
            let payloads: Vec<Payload> = local
                .iter()
                .map(|p| {
                    let mut h = vec![0.0; d];
                    for (&coord, &v) in support.iter().zip(p) {
                        h[coord] = v;
                    }
                    Payload::Vector(h)
                })
                .collect();
            support_of.extend(std::iter::repeat_n(k, payloads.len()));
            all.extend(payloads.iter().cloned());
            per_support.push(FiniteHypothesisSpace::new(payloads)?);
        }
        Ok(Self {
            supports,
            per_support,
            union: FiniteHypothesisSpace::new(all)?,
            support_of,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{objective, DataDistribution, Dataset};
    use crate::rng::rng_from_seed;

    #[test]
    fn sparse_space_shapes() {
        let p = BestSubsetRegression::new(3, 2, 0.1).unwrap();
        let sp = SparseSpace::new(&p, 4).unwrap();
        assert_eq!(sp.supports.len(), 3);
        // 4x4 centers at ±0.25, ±0.75; inside the unit ball: all but the 4 corners
        assert_eq!(sp.per_support[0].len(), 12);
        assert_eq!(sp.union.len(), 36);
        for (h, &k) in sp.union.hypotheses().iter().zip(&sp.support_of) {
            let v = h.payload.as_vector().unwrap();
            let nz: Vec<usize> = (0..3).filter(|&i| v[i] != 0.0).collect();
            assert_eq!(nz, sp.supports[k]);
        }
        assert!(SparseSpace::with_cap(&p, 4, 2).is_err());
    }

    #[test]
    fn zeta_dominates_regularizer() {
        let p = BestSubsetRegression::new(4, 2, 0.3).unwrap();
        let sp = SparseSpace::new(&p, 6).unwrap();
        for n in [1, 10, 1000] {
            let sup = sp
                .union
                .hypotheses()
                .iter()
                .map(|h| p.regularizer(n, &h.payload).abs())
                .fold(0.0, f64::max);
            assert!(sup <= p.zeta(n) + 1e-15);
        }
    }

    #[test]
    fn loss_in_unit_range() {
        let p = BestSubsetRegression::new(4, 2, 0.0).unwrap();
        let sp = SparseSpace::new(&p, 5).unwrap();
        let d = DataDistribution::LinearRegression {
            weights: vec![1.0, -1.0, 0.0, 0.5],
            noise: 0.5,
        };
        let z: Dataset = d.sample_dataset(50, &mut rng_from_seed(4)).unwrap();
        for h in sp.union.hypotheses() {
            for pt in z.points() {
                let l = p.loss(&h.payload, pt);
                assert!((0.0..=1.0).contains(&l));
            }
            assert!(objective(&p, &h.payload, &z).is_finite());
        }
    }
}
