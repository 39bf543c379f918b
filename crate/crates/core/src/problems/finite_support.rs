use itertools::Itertools;

use super::{DataPoint, Domain, LabelKind, Problem};
use crate::error::{invalid, Error, Result};
use crate::hypothesis_space::{FiniteHypothesisSpace, Payload};

/// Estimating the support of a distribution on `[0, 1]` by a finite union
/// of grid cells. A hypothesis is a set of cell indices and the loss is
/// `1(cell(z) not in h)`.
#[derive(Debug, Clone)]
pub struct FiniteSupportEstimation {
    cells: usize,
    max_size: usize,
    domain: Domain,
}

/// Largest hypothesis space `space()` will build.
pub const SUBSET_SPACE_CAP: u64 = 1_000_000;

impl FiniteSupportEstimation {
    pub fn new(cells: usize, max_size: usize) -> Result<Self> {
        if cells == 0 || max_size > cells {
            return Err(invalid("need at least one cell and max_size <= cells"));
        }
        Ok(Self {
            cells,
            max_size,
            domain: Domain::unit_box(1, LabelKind::None),
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cell_of(&self, x: f64) -> usize {
        ((x * self.cells as f64).floor().max(0.0) as usize).min(self.cells - 1)
    }

    /// Every subset of at most `max_size` cells, by size then
    /// lexicographically.
    pub fn space(&self) -> Result<FiniteHypothesisSpace> {
        let count: f64 = (0..=self.max_size).map(|k| binomial(self.cells, k)).sum();
        if count > SUBSET_SPACE_CAP as f64 {
            return Err(Error::SizeLimit {
                what: "subset hypotheses".into(),
                requested: count,
                cap: SUBSET_SPACE_CAP as f64,
            });
        }
        let payloads = (0..=self.max_size)
            .flat_map(|k| (0..self.cells).combinations(k))
            .map(Payload::Subset)
            .collect();
        FiniteHypothesisSpace::new(payloads)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Problem for FiniteSupportEstimation {
    fn name(&self) -> &str {
        "finite_support_estimation"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn loss(&self, h: &Payload, z: &DataPoint) -> f64 {
        let set = h.as_subset().expect("support hypotheses are index sets");
        if set.binary_search(&self.cell_of(z.x0())).is_ok() {
            0.0
        } else {
            1.0
        }
    }
}
