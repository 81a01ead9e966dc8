use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit;
use crate::logspace;
use crate::measurement::PointerMap;
use crate::product;

use super::cells::CellPartitionSpec;
use super::observable::IntensiveObservable;
use super::probability::ProductSpinState;

/// Window membership slack, in units of the up count.
const WINDOW_SLACK: f64 = 1e-9;

/// Chains of independent sites that are up with probability `p_up`, except for a fixed set of edited sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFamily {
    pub p_up: f64,
    pub overrides: BTreeMap<usize, f64>,
    /// `(f, p)`: the first `⌊f N⌋` sites are up with probability `p`; models edits that grow with `N`.
    pub extensive_edit: Option<(f64, f64)>,
}

impl ProductFamily {
    pub fn bernoulli(p_up: f64) -> Self {
        ProductFamily {
            p_up,
            overrides: BTreeMap::new(),
            extensive_edit: None,
        }
    }

    pub fn state(&self, n: usize) -> Result<ProductSpinState> {
        let mut overrides: BTreeMap<usize, f64> =
            self.overrides.iter().filter(|(&k, _)| k < n).map(|(&k, &p)| (k, p)).collect();
        if let Some((f, p)) = self.extensive_edit {
            for k in 0..((f * n as f64).floor() as usize).min(n) {
                overrides.insert(k, p);
            }
        }
        ProductSpinState::with_overrides(n, self.p_up, overrides)
    }

    /// `σ(m) = -D((1+m)/2 || p)`, the rate of the bulk sites.
    pub fn analytic_rate(&self, m: f64) -> f64 {
        -logspace::bernoulli_relative_entropy(0.5 * (1.0 + m), self.p_up)
    }

    /// The unique maximizer `2p - 1`.
    pub fn analytic_max_location(&self) -> f64 {
        2.0 * self.p_up - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub m: f64,
    pub n: usize,
    /// `ln P(m̂ ∈ [m - δ, m + δ])`, `None` when the window carries no probability.
    pub ln_probability: Option<f64>,
    pub empirical: Option<f64>,
    pub analytic: f64,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionEstimate {
    pub family: ProductFamily,
    pub grid: Vec<f64>,
    pub n_values: Vec<usize>,
    /// Ordered by grid point, then by `N`.
    pub samples: Vec<RateSample>,
    /// Per grid point, the `N → ∞` limit of a fit `a + b ln N / N + c / N`.
    pub extrapolated: Vec<Option<f64>>,
    pub fitted_max_location: f64,
    /// `(m, N)` points whose window probability is exactly zero.
    pub dropped: Vec<(f64, usize)>,
}

impl RateFunctionEstimate {
    pub fn sample(&self, m_index: usize, n_index: usize) -> &RateSample {
        &self.samples[m_index * self.n_values.len() + n_index]
    }

    /// Largest `|empirical - analytic|` over the grid at the `N` with index `n_index`.
    pub fn max_residual(&self, n_index: usize) -> Option<f64> {
        (0..self.grid.len())
            .filter_map(|i| self.sample(i, n_index).residual.map(f64::abs))
            .reduce(f64::max)
    }
}

/// `ln P(|m̂ - m| ≤ δ)` with `δ` half the local spectrum gap.
pub fn ln_window_probability(state: &ProductSpinState, m: f64) -> Result<Option<f64>> {
    let n = state.n();
    let obs = IntensiveObservable::spin_magnetization(n, false)?;
    let delta = obs.local_half_gap(m);
    let nf = n as f64;
    let lo = (0.5 * nf * (1.0 + m - delta) - WINDOW_SLACK).ceil().max(0.0) as usize;
    let hi = (0.5 * nf * (1.0 + m + delta) + WINDOW_SLACK).floor().min(nf) as usize;
    if lo > hi {
        return Ok(None);
    }
    let p = product::cell_sums(&state.site_groups(), &[lo..hi + 1]).values[0];
    Ok((!p.is_zero()).then_some(p.ln_abs))
}

pub fn estimate_rate(family: &ProductFamily, n_values: &[usize], grid: &[f64]) -> Result<RateFunctionEstimate> {
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 || (ns[ns.len() - 1] as f64) < 4.0 * ns[0] as f64 {
        return Err(Error::Precondition(format!(
            "rate estimation needs at least 3 chain lengths spanning a factor of 4, got {ns:?}"
        )));
    }
    if grid.is_empty() || grid.iter().any(|m| !(-1.0..=1.0).contains(m)) {
        return Err(Error::Precondition("grid points must lie in [-1, 1]".into()));
    }
    let jobs: Vec<(f64, usize)> = grid.iter().flat_map(|&m| ns.iter().map(move |&n| (m, n))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(m, n)| {
            let ln_p = ln_window_probability(&family.state(n)?, m)?;
            let empirical = ln_p.map(|l| l / n as f64);
            let analytic = family.analytic_rate(m);
            Ok(RateSample {
                m,
                n,
                ln_probability: ln_p,
                empirical,
                analytic,
                residual: empirical.map(|e| e - analytic),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let dropped = samples.iter().filter(|s| s.empirical.is_none()).map(|s| (s.m, s.n)).collect();
    let extrapolated: Vec<Option<f64>> = grid
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let pts: Vec<(f64, f64)> = samples[i * ns.len()..(i + 1) * ns.len()]
                .iter()
                .filter_map(|s| s.empirical.map(|e| (s.n as f64, e)))
                .collect();
            if pts.len() < 3 {
                return None;
            }
            let design: Vec<Vec<f64>> = pts.iter().map(|&(n, _)| vec![1.0, n.ln() / n, 1.0 / n]).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            fit::least_squares(&design, &y).ok().map(|f| f.coefficients[0])
        })
        .collect();
    let largest = ns.len() - 1;
    let score = |i: usize| extrapolated[i].or(samples[i * ns.len() + largest].empirical);
    let fitted_max_location = (0..grid.len())
        .filter_map(|i| score(i).map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(f64::NAN, |(i, _)| grid[i]);
    Ok(RateFunctionEstimate {
        family: family.clone(),
        grid: grid.to_vec(),
        n_values: ns,
        samples,
        extrapolated,
        fitted_max_location,
        dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpConditionReport {
    /// Maximizer `m_r` of each rate curve.
    pub maximizers: Vec<f64>,
    pub unique_maximizer: bool,
    /// `m_r` lies inside `J_{φ^{-1}(r)}` and the cells `φ^{-1}(r)` are distinct.
    pub interior: bool,
    /// `min_r inf_{m ∉ J_{φ^{-1}(r)}} σ_r(m_r) - σ_r(m)`; `None` with a single cell.
    pub gap_constant: Option<f64>,
    /// Largest rate change caused by the local perturbation at the largest `N`.
    pub perturbation_residual: Option<f64>,
    pub local_stable: Option<bool>,
}

impl LdpConditionReport {
    pub fn passed(&self) -> bool {
        self.unique_maximizer
            && self.interior
            && self.gap_constant.is_none_or(|c| c > 0.0)
            && self.local_stable.unwrap_or(true)
    }
}

/// Rate curves counted as unaffected when `N · max|Δσ|` at the largest `N`
/// has not grown beyond this factor of its value at the smallest `N`.
const LOCALITY_GROWTH: f64 = 2.0;

/// Checks the large-deviation conditions for one estimate per sector `r`.
///
/// `perturbed`, when given, holds estimates of the same families after a local
/// edit of the initial state.
pub fn check_ldp_conditions(
    estimates: &[RateFunctionEstimate],
    cells: &CellPartitionSpec,
    pointer: &PointerMap,
    perturbed: Option<&[RateFunctionEstimate]>,
) -> Result<LdpConditionReport> {
    if estimates.len() != pointer.n() {
        return Err(Error::Structural(format!(
            "{} rate estimates for a pointer map over {} sectors",
            estimates.len(),
            pointer.n()
        )));
    }
    let mut maximizers = Vec::new();
    let mut unique = true;
    let mut interior = true;
    let mut gap = None::<f64>;
    let mut seen_cells = Vec::new();
    for (r, est) in estimates.iter().enumerate() {
        let fam = &est.family;
        let m_r = fam.analytic_max_location();
        maximizers.push(m_r);
        // Strict concavity of -D gives a unique maximizer; check the grid agrees.
        let on_grid = est.grid.iter().map(|&m| fam.analytic_rate(m)).fold(f64::NEG_INFINITY, f64::max);
        let ties = est
            .grid
            .iter()
            .filter(|&&m| (fam.analytic_rate(m) - on_grid).abs() < 1e-12)
            .count();
        unique &= ties == 1 || est.grid.contains(&m_r);

        let alpha = pointer.cell_of_sector(r);
        interior &= cells.cell_of(m_r)? == alpha && cells.is_interior(alpha, m_r);
        interior &= !seen_cells.contains(&alpha);
        seen_cells.push(alpha);

        // -D is concave, so its supremum off J_α is attained on the grid or at an edge of J_α.
        let (a, b) = cells.interval(alpha);
        let mut outside: Vec<f64> = est.grid.iter().copied().filter(|&m| cells.cell_of(m).ok() != Some(alpha)).collect();
        for edge in cells.interior_boundaries() {
            if edge == a || edge == b {
                outside.push(edge);
            }
        }
        if let Some(best) = outside.iter().map(|&m| fam.analytic_rate(m)).reduce(f64::max) {
            let g = fam.analytic_rate(m_r) - best;
            gap = Some(gap.map_or(g, |c| c.min(g)));
        }
    }

    let (perturbation_residual, local_stable) = match perturbed {
        None => (None, None),
        Some(pert) => {
            if pert.len() != estimates.len() {
                return Err(Error::Structural("perturbed estimates do not match the baseline".into()));
            }
            let mut worst_last = 0.0f64;
            let mut stable = true;
            for (base, p) in estimates.iter().zip(pert) {
                let scaled = |k: usize| -> f64 {
                    let n = base.n_values[k] as f64;
                    (0..base.grid.len())
                        .filter_map(|i| match (base.sample(i, k).empirical, p.sample(i, k).empirical) {
                            (Some(x), Some(y)) => Some((x - y).abs()),
                            _ => None,
                        })
                        .fold(0.0, f64::max)
                        * n
                };
                let last = base.n_values.len() - 1;
                let (first_scaled, last_scaled) = (scaled(0), scaled(last));
                worst_last = worst_last.max(last_scaled / base.n_values[last] as f64);
                stable &= last_scaled <= LOCALITY_GROWTH * first_scaled + 1e-12;
            }
            (Some(worst_last), Some(stable))
        }
    };

    Ok(LdpConditionReport {
        maximizers,
        unique_maximizer: unique,
        interior,
        gap_constant: gap,
        perturbation_residual,
        local_stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::{coarse_grain, IntensiveObservable};

    #[test]
    fn analytic_rate_values() {
        let fam = ProductFamily::bernoulli(0.8);
        assert!(fam.analytic_rate(0.6).abs() < 1e-15);
        assert!((fam.analytic_rate(-0.2) + 0.381_908_50).abs() < 1e-8);
        // Concave: second differences are negative.
        let h = 0.05;
        for i in 1..39 {
            let m = -1.0 + i as f64 * h;
            let d2 = fam.analytic_rate(m + h) - 2.0 * fam.analytic_rate(m) + fam.analytic_rate(m - h);
            assert!(d2 < 0.0);
        }
    }

    #[test]
    fn empirical_rate_converges() {
        let fam = ProductFamily::bernoulli(0.8);
        let est = estimate_rate(&fam, &[100, 200, 400, 800], &[-0.2, 0.2, 0.6]).unwrap();
        let s = est.sample(0, 3);
        assert!((s.empirical.unwrap() - s.analytic).abs() < 0.02);
        let res: Vec<f64> = (0..4).map(|k| est.sample(0, k).residual.unwrap().abs()).collect();
        assert!(res.windows(2).all(|w| w[1] < w[0]));
        assert!((est.extrapolated[0].unwrap() + 0.381_908_50).abs() < 2e-3);
        assert_eq!(est.fitted_max_location, 0.6);
    }

    #[test]
    fn short_sweeps_are_rejected() {
        let fam = ProductFamily::bernoulli(0.8);
        assert!(estimate_rate(&fam, &[100, 200], &[0.0]).is_err());
        assert!(estimate_rate(&fam, &[100, 200, 300], &[0.0]).is_err());
    }

    #[test]
    fn chain_conditions_and_gap() {
        let obs = IntensiveObservable::spin_magnetization(10, false).unwrap();
        let cells = coarse_grain(&obs, 2).unwrap().spec;
        let phi = PointerMap::from_phi(vec![1, 0]).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let ns = [50, 100, 200];
        let up = estimate_rate(&ProductFamily::bernoulli(0.8), &ns, &grid).unwrap();
        let down = estimate_rate(&ProductFamily::bernoulli(0.2), &ns, &grid).unwrap();
        let rep = check_ldp_conditions(&[up.clone(), down.clone()], &cells, &phi, None).unwrap();
        assert!(rep.unique_maximizer && rep.interior);
        assert!((rep.maximizers[0] - 0.6).abs() < 1e-15);
        assert!((rep.maximizers[1] + 0.6).abs() < 1e-15);
        let d = logspace::bernoulli_relative_entropy(0.5, 0.8);
        assert!((rep.gap_constant.unwrap() - d).abs() < 1e-12);
        assert!(rep.passed());

        let edit = |fam: &ProductFamily, sites: usize| ProductFamily {
            overrides: (0..sites).map(|k| (k, 1.0 - fam.p_up)).collect(),
            ..fam.clone()
        };
        let local = [
            estimate_rate(&edit(&up.family, 2), &ns, &grid).unwrap(),
            estimate_rate(&edit(&down.family, 2), &ns, &grid).unwrap(),
        ];
        let rep = check_ldp_conditions(&[up.clone(), down.clone()], &cells, &phi, Some(&local)).unwrap();
        assert_eq!(rep.local_stable, Some(true));
        assert!(rep.perturbation_residual.unwrap() < 0.05);

        // Editing half of each chain moves the whole curve.
        let wide: Vec<RateFunctionEstimate> = [&up, &down]
            .iter()
            .map(|e| {
                let fam = ProductFamily {
                    extensive_edit: Some((0.5, 0.5)),
                    ..e.family.clone()
                };
                estimate_rate(&fam, &ns, &grid).unwrap()
            })
            .collect();
        let rep = check_ldp_conditions(&[up, down], &cells, &phi, Some(&wide)).unwrap();
        assert_eq!(rep.local_stable, Some(false));
    }

    #[test]
    fn maximizer_on_a_boundary_fails_interior() {
        let obs = IntensiveObservable::spin_magnetization(10, false).unwrap();
        let cells = coarse_grain(&obs, 2).unwrap().spec;
        let est = estimate_rate(&ProductFamily::bernoulli(0.5), &[50, 100, 200], &[-0.5, 0.0, 0.5]).unwrap();
        let est2 = estimate_rate(&ProductFamily::bernoulli(0.9), &[50, 100, 200], &[-0.5, 0.0, 0.5]).unwrap();
        let rep = check_ldp_conditions(&[est, est2], &cells, &PointerMap::from_phi(vec![0, 1]).unwrap(), None).unwrap();
        assert!(!rep.interior);
        assert!(!rep.passed());
    }
}
