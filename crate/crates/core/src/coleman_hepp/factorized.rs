use std::ops::Range;

use num_complex::Complex64;

use crate::coarse::{coarse_grain, IntensiveObservable};
use crate::error::{Error, Result};
use crate::logspace::{self, LogValue};
use crate::model::FTensor;
use crate::product::{self, SiteGroup, SitePair};

use super::chain::{ChainSpec, Mat2};

/// `Ω_{r,s}` of the chain as a phase times a product of single-site operators.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedSectorOverlap {
    /// `e^{i(ε_s - ε_r)t}`
    pub phase: LogValue,
    /// Runs of identical single-site operators `x_k = R_r^† ρ_k R_s`.
    pub per_site: Vec<(usize, Mat2)>,
}

impl FactorizedSectorOverlap {
    pub fn n_sites(&self) -> usize {
        self.per_site.iter().map(|g| g.0).sum()
    }

    fn site_groups(&self) -> Vec<SiteGroup> {
        self.per_site
            .iter()
            .map(|&(count, x)| SiteGroup {
                count,
                pair: SitePair {
                    up: x.0[0][0],
                    down: x.0[1][1],
                },
            })
            .collect()
    }

    /// Phase-free trace of `⊗_k x_k` restricted to each up-count range.
    pub fn cell_traces(&self, ranges: &[Range<usize>]) -> Vec<LogValue> {
        product::cell_sums(&self.site_groups(), ranges).values
    }

    /// Coefficients `dp[j]` of the up-count generating polynomial; `O(N^2)`.
    pub fn magnetization_dp(&self) -> Vec<LogValue> {
        product::full_distribution(&self.site_groups()).0
    }

    /// `Π_k Tr(x_k)` in log form.
    pub fn total_trace(&self) -> LogValue {
        self.per_site
            .iter()
            .fold(LogValue::ONE, |acc, &(count, x)| acc.mul(LogValue::from_complex(x.trace()).powi(count)))
    }

    /// Relative gap between `Σ_j dp[j]` and `Π_k Tr(x_k)`.
    pub fn generating_function_residual(&self) -> f64 {
        let dp = self.magnetization_dp();
        let total = self.total_trace();
        let sum = logspace::sum(&dp).value;
        if total.is_zero() {
            return if sum.is_zero() { 0.0 } else { f64::INFINITY };
        }
        // Compare after removing the common scale so deep underflow does not matter.
        let a = sum.scale_ln(-total.ln_abs).to_complex();
        let b = LogValue { ln_abs: 0.0, ..total }.to_complex();
        (a - b).norm()
    }
}

/// Single-site operators of sector pair `(r, s)` when the first `passed` sites have been rotated.
pub fn sector_overlap(spec: &ChainSpec, r: usize, s: usize, passed: usize, t: f64) -> FactorizedSectorOverlap {
    let rho = spec.bulk_state();
    let passed = passed.min(spec.n);
    let rotated = |x: &Mat2| spec.site_rotation(r).adjoint().mul(x).mul(&spec.site_rotation(s));
    let overrides_passed = spec.site_overrides.keys().filter(|&&k| k < passed).count();
    let mut per_site = vec![
        (passed - overrides_passed, rotated(&rho)),
        (spec.n - passed - (spec.site_overrides.len() - overrides_passed), rho),
    ];
    for (&k, x) in &spec.site_overrides {
        per_site.push((1, if k < passed { rotated(x) } else { *x }));
    }
    let dphi = (spec.energy(s) - spec.energy(r)) * t;
    FactorizedSectorOverlap {
        phase: LogValue::unit(dphi),
        per_site,
    }
}

/// Up-count ranges of the two magnetization cells, `[−1, 0)` then `[0, 1]`.
pub fn magnetization_cells(n: usize) -> Result<Vec<Range<usize>>> {
    let obs = IntensiveObservable::spin_magnetization(n, false)?;
    Ok(coarse_grain(&obs, 2)?.spec.spectrum_ranges())
}

fn tensor_with_schedule(spec: &ChainSpec, passed: usize, t: f64) -> Result<FTensor> {
    spec.validate()?;
    let cells = magnetization_cells(spec.n)?;
    let mut logs = Vec::with_capacity(8);
    for r in 0..2 {
        for s in 0..2 {
            let overlap = sector_overlap(spec, r, s, passed, t);
            for v in overlap.cell_traces(&cells) {
                logs.push(overlap.phase.mul(v));
            }
        }
    }
    FTensor::from_logs(2, t, logs)
}

/// Exact `F` after full traversal; scales to very long chains.
pub fn factorized_f_tensor(spec: &ChainSpec) -> Result<FTensor> {
    tensor_with_schedule(spec, spec.n, spec.t)
}

/// `F` when the particle has passed the first `⌊fraction · N⌋` sites, at time `fraction · t`.
pub fn traversal_schedule(spec: &ChainSpec, fraction: f64) -> Result<FTensor> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Precondition(format!("traversal fraction {fraction} is not in [0, 1]")));
    }
    let passed = (fraction * spec.n as f64).floor() as usize;
    tensor_with_schedule(spec, passed, fraction * spec.t)
}

/// `Tr(ρ R(θ)) ` for the bulk site, whose `N`-th power is `|Σ_α F_{+,−;α}|`.
pub fn site_coherence(spec: &ChainSpec) -> Complex64 {
    spec.bulk_state().mul(&Mat2::rotation(spec.theta)).trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn four_sites_binomial_tail() {
        let f = factorized_f_tensor(&ChainSpec::new(4, 0.6, PI).unwrap()).unwrap();
        // Cell 1 is m ≥ 0; sector 0 keeps the up-biased chain.
        assert!((f.get(0, 0, 1).re - 0.9728).abs() < 1e-14);
        // The flipped chain has P(j ≥ 2) with p = 0.2; j = 2 (m = 0) belongs to the upper cell.
        assert!((f.get(1, 1, 0).re - 0.8192).abs() < 1e-14);
        assert!((f.get(1, 1, 1).re - 0.1808).abs() < 1e-14);
    }

    #[test]
    fn odd_chains_are_mirror_symmetric() {
        let f = factorized_f_tensor(&ChainSpec::new(7, 0.6, PI).unwrap()).unwrap();
        assert!((f.get(0, 0, 1) - f.get(1, 1, 0)).norm() < 1e-15);
        assert!((f.get(0, 0, 0) - f.get(1, 1, 1)).norm() < 1e-15);
    }

    #[test]
    fn full_flip_kills_coherences() {
        let f = factorized_f_tensor(&ChainSpec::new(30, 0.6, PI).unwrap()).unwrap();
        for a in 0..2 {
            assert_eq!(f.get(0, 1, a), Complex64::new(0.0, 0.0));
            assert!(f.log_entry(1, 0, a).is_zero());
        }
    }

    #[test]
    fn coherence_is_power_of_site_trace() {
        let mut spec = ChainSpec::new(40, 0.3, 1.1).unwrap();
        spec.energies = (0.4, -0.9);
        spec.t = 2.0;
        let f = factorized_f_tensor(&spec).unwrap();
        let total = f.cell_sum(0, 1);
        let expected = 40.0 * (1.1f64 / 2.0).cos().abs().ln();
        assert!((total.ln_abs - expected).abs() < 1e-12);
        assert!((site_coherence(&spec).norm() - (1.1f64 / 2.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn generating_function_is_consistent() {
        let mut spec = ChainSpec::new(25, 0.45, 2.2).unwrap();
        spec.site_overrides.insert(3, Mat2::polarized(-0.2));
        spec.site_overrides.insert(20, Mat2::real_diagonal(0.5, 0.5));
        for (r, s) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let ov = sector_overlap(&spec, r, s, 25, 1.0);
            assert_eq!(ov.n_sites(), 25);
            assert!(ov.generating_function_residual() < 1e-9);
        }
    }

    #[test]
    fn traversal_endpoints() {
        let mut spec = ChainSpec::new(12, 0.6, 2.0).unwrap();
        spec.energies = (0.3, 1.2);
        spec.t = 1.5;
        let start = traversal_schedule(&spec, 0.0).unwrap();
        for a in 0..2 {
            assert_eq!(start.get(0, 0, a), start.get(1, 1, a));
            assert_eq!(start.get(0, 1, a), start.get(0, 0, a));
        }
        assert_eq!(traversal_schedule(&spec, 1.0).unwrap(), factorized_f_tensor(&spec).unwrap());
        assert!(traversal_schedule(&spec, 1.5).is_err());
    }

    #[test]
    fn overrides_before_and_after_the_particle() {
        let mut spec = ChainSpec::new(6, 0.6, PI).unwrap();
        spec.site_overrides.insert(0, Mat2::polarized(-0.6));
        spec.site_overrides.insert(5, Mat2::polarized(0.2));
        let ov = sector_overlap(&spec, 1, 1, 3, 1.0);
        assert_eq!(ov.per_site[0].0, 2);
        assert_eq!(ov.per_site[1].0, 2);
        // Site 0 was passed and flipped, site 5 was not.
        assert_eq!(ov.per_site[2].1, Mat2::polarized(0.6));
        assert_eq!(ov.per_site[3].1, Mat2::polarized(0.2));
    }
}
