use std::collections::BTreeMap;

use faer::MatRef;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::logspace::LogValue;
use crate::model::PhaseCellPartition;
use crate::product::{self, SiteGroup, SitePair};

use super::cells::CellPartitionSpec;

/// Diagonal product state of a spin chain: site `k` is up with probability `p_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpinState {
    n: usize,
    bulk: f64,
    overrides: BTreeMap<usize, f64>,
}

impl ProductSpinState {
    pub fn bernoulli(n: usize, p_up: f64) -> Result<Self> {
        Self::with_overrides(n, p_up, BTreeMap::new())
    }

    pub fn with_overrides(n: usize, p_up: f64, overrides: BTreeMap<usize, f64>) -> Result<Self> {
        for &p in overrides.values().chain(std::iter::once(&p_up)) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Precondition(format!("up probability {p} is not in [0, 1]")));
            }
        }
        if let Some(&k) = overrides.keys().find(|&&k| k >= n) {
            return Err(Error::Precondition(format!("override site {k} outside chain of {n}")));
        }
        Ok(ProductSpinState {
            n,
            bulk: p_up,
            overrides,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bulk_up_probability(&self) -> f64 {
        self.bulk
    }

    pub fn overrides(&self) -> &BTreeMap<usize, f64> {
        &self.overrides
    }

    pub fn site_groups(&self) -> Vec<SiteGroup> {
        let pair = |p: f64| SitePair {
            up: Complex64::new(p, 0.0),
            down: Complex64::new(1.0 - p, 0.0),
        };
        let mut groups = vec![SiteGroup {
            count: self.n - self.overrides.len(),
            pair: pair(self.bulk),
        }];
        groups.extend(self.overrides.values().map(|&p| SiteGroup { count: 1, pair: pair(p) }));
        groups
    }
}

/// `P(m ∈ J_α)` for a product state; `spec` must come from the magnetization of the same chain.
pub fn cell_probability_product(state: &ProductSpinState, spec: &CellPartitionSpec) -> Result<Vec<LogValue>> {
    if spec.point_cells().len() != state.n() + 1 {
        return Err(Error::Structural(format!(
            "cell partition covers {} spectrum points, chain of {} has {}",
            spec.point_cells().len(),
            state.n(),
            state.n() + 1
        )));
    }
    let sums = product::cell_sums(&state.site_groups(), &spec.spectrum_ranges());
    Ok(sums.values)
}

/// `Tr(ρ Π_α)` for a dense state.
pub fn cell_probability_dense(rho: MatRef<'_, Complex64>, partition: &PhaseCellPartition) -> Result<Vec<f64>> {
    if rho.nrows() != partition.dim() {
        return Err(Error::Structural(format!(
            "state of dimension {} against partition of dimension {}",
            rho.nrows(),
            partition.dim()
        )));
    }
    Ok(partition.projectors().iter().map(|p| p.trace_against(rho).re).collect())
}
