//! Up-count resolved sums over product operators on chains of two-level sites.
//!
//! Every quantity of the form `Tr(⊗_k x_k · Π)` with `Π` diagonal in the
//! product basis and depending only on the number `j` of up spins reduces to
//! the coefficients of the generating polynomial `Π_k (down_k + up_k z)`.
//! Sites sharing a diagonal pair are grouped and expanded in closed binomial
//! form; the largest group is never convolved, only prefix/suffix-summed, so a
//! chain with `k` distinct sites besides two bulk groups costs `O(N k)`.

use std::ops::Range;

use num_complex::Complex64;

use crate::logspace::{self, LogValue};

/// Diagonal entries `(x_00, x_11)` of a single-site operator; index 0 is spin up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SitePair {
    pub up: Complex64,
    pub down: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteGroup {
    pub count: usize,
    pub pair: SitePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSums {
    pub values: Vec<LogValue>,
    pub mixed_phase: bool,
}

pub fn total_sites(groups: &[SiteGroup]) -> usize {
    groups.iter().map(|g| g.count).sum()
}

/// Coefficients `C(L, j) up^j down^(L-j)` of one group.
///
/// Written as `(|up| + |down|)^L` times a binomial mass function so that the
/// magnitudes keep full relative precision for long chains.
pub fn group_distribution(group: &SiteGroup) -> Vec<LogValue> {
    let up = LogValue::from_complex(group.pair.up);
    let down = LogValue::from_complex(group.pair.down);
    let a = group.pair.up.norm();
    let b = group.pair.down.norm();
    if a + b == 0.0 {
        let mut out = vec![LogValue::ZERO; group.count + 1];
        if group.count == 0 {
            out[0] = LogValue::ONE;
        }
        return out;
    }
    let ln_scale = group.count as f64 * (a + b).ln();
    let pmf = logspace::ln_binomial_pmf(group.count, a / (a + b));
    (0..=group.count)
        .map(|j| {
            if pmf[j] == f64::NEG_INFINITY {
                return LogValue::ZERO;
            }
            let phase = up.powi(j).mul(down.powi(group.count - j)).phase;
            LogValue {
                ln_abs: pmf[j] + ln_scale,
                phase,
            }
        })
        .collect()
}

/// Discrete convolution in log space; returns the result and a mixed-phase flag.
pub fn convolve(a: &[LogValue], b: &[LogValue]) -> (Vec<LogValue>, bool) {
    let len = a.len() + b.len() - 1;
    let mut mixed = false;
    let mut terms = Vec::new();
    let out = (0..len)
        .map(|j| {
            terms.clear();
            let lo = j.saturating_sub(b.len() - 1);
            let hi = j.min(a.len() - 1);
            for i in lo..=hi {
                terms.push(a[i].mul(b[j - i]));
            }
            let s = logspace::sum(&terms);
            mixed |= s.mixed_phase;
            s.value
        })
        .collect();
    (out, mixed)
}

/// Full up-count distribution of the product; `O(N^2)` in the worst case.
pub fn full_distribution(groups: &[SiteGroup]) -> (Vec<LogValue>, bool) {
    let mut dist = vec![LogValue::ONE];
    let mut mixed = false;
    for g in groups.iter().filter(|g| g.count > 0) {
        let (next, m) = convolve(&dist, &group_distribution(g));
        dist = next;
        mixed |= m;
    }
    (dist, mixed)
}

/// Sums of the generating coefficients over half-open up-count ranges.
pub fn cell_sums(groups: &[SiteGroup], cells: &[Range<usize>]) -> CellSums {
    let groups: Vec<SiteGroup> = groups.iter().copied().filter(|g| g.count > 0).collect();
    let Some(bulk_idx) = groups
        .iter()
        .enumerate()
        .max_by_key(|(i, g)| (g.count, std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
    else {
        // Empty chain: the only configuration has zero up spins.
        let values = cells
            .iter()
            .map(|c| if c.contains(&0) { LogValue::ONE } else { LogValue::ZERO })
            .collect();
        return CellSums {
            values,
            mixed_phase: false,
        };
    };

    let mut mixed = false;
    let mut rest = vec![LogValue::ONE];
    for (i, g) in groups.iter().enumerate() {
        if i == bulk_idx {
            continue;
        }
        let (next, m) = convolve(&rest, &group_distribution(g));
        rest = next;
        mixed |= m;
    }

    let bulk = group_distribution(&groups[bulk_idx]);
    let len = bulk.len();
    let (prefix, m1) = running_sums(bulk.iter().copied());
    let (mut suffix, m2) = running_sums(bulk.iter().rev().copied());
    suffix.reverse();
    mixed |= m1 | m2;
    let mut terms = Vec::with_capacity(rest.len());
    let values = cells
        .iter()
        .map(|cell| {
            terms.clear();
            for (j1, d) in rest.iter().enumerate() {
                if d.is_zero() || cell.end <= j1 {
                    continue;
                }
                let a = cell.start.saturating_sub(j1);
                let b = (cell.end - j1).min(len);
                if a >= b {
                    continue;
                }
                let window = if a == 0 {
                    prefix[b]
                } else if b == len {
                    suffix[a]
                } else {
                    let s = logspace::sum(&bulk[a..b]);
                    mixed |= s.mixed_phase;
                    s.value
                };
                terms.push(d.mul(window));
            }
            let s = logspace::sum(&terms);
            mixed |= s.mixed_phase;
            s.value
        })
        .collect();
    CellSums {
        values,
        mixed_phase: mixed,
    }
}

/// Running sums `[0, t_0, t_0 + t_1, ...]`.
///
/// Partial sums stay in log form while they are negligible next to the largest
/// term and switch to one compensated linear accumulator afterwards, so a
/// long run keeps `O(eps)` relative accuracy instead of one rounding per step.
fn running_sums(terms: impl Iterator<Item = LogValue> + Clone) -> (Vec<LogValue>, bool) {
    let scale = terms.clone().map(|t| t.ln_abs).fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![LogValue::ZERO];
    let mut mixed = false;
    let mut first_phase = None;
    let mut small = LogValue::ZERO;
    let mut linear: Option<logspace::Neumaier> = None;
    for t in terms {
        if !t.is_zero() {
            match first_phase {
                None => first_phase = Some(t.phase),
                Some(p) if p != t.phase => mixed = true,
                _ => {}
            }
        }
        match linear.as_mut() {
            Some(acc) => {
                if !t.is_zero() {
                    acc.add(logspace::polar((t.ln_abs - scale).exp(), t.phase));
                }
                out.push(LogValue::from_complex(acc.total()).scale_ln(scale));
            }
            None => {
                small = logspace::sum(&[small, t]).value;
                if !small.is_zero() && small.ln_abs - scale > -600.0 {
                    let mut acc = logspace::Neumaier::default();
                    acc.add(logspace::polar((small.ln_abs - scale).exp(), small.phase));
                    linear = Some(acc);
                }
                out.push(small);
            }
        }
    }
    (out, mixed)
}
