use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::FTensor;

use super::conditions::ln_max_pointer_error;
use super::decay::{fit_decay_points, DecayFit};
use super::pointer::find_pointer_map;

/// An apparatus family over `N` with an optional localized edit of its initial state.
pub trait PerturbedFamily: Sync {
    fn tensor(&self, n: usize, perturbed: bool) -> Result<FTensor>;

    /// Number of sites the perturbation touches at size `n`.
    fn perturbation_support(&self, n: usize) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    /// Allowed relative change of the fitted decay constant.
    pub band: f64,
    /// Evaluate and judge perturbations whose support grows with `N` instead of rejecting them.
    pub force_nonlocal: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            band: 0.25,
            force_nonlocal: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub n: usize,
    pub support: usize,
    pub ln_error_baseline: f64,
    pub ln_error_perturbed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub points: Vec<StabilityPoint>,
    pub baseline: DecayFit,
    pub perturbed: Option<DecayFit>,
    pub local: bool,
    /// `|c_perturbed / c_baseline - 1|`
    pub relative_shift: Option<f64>,
    /// Every perturbed point obeys `ε ≤ exp(-(1 - band) c_baseline N)`.
    pub bound_holds: bool,
    pub passed: bool,
    pub notes: Vec<String>,
}

pub fn stability_test(
    family: &dyn PerturbedFamily,
    n_values: &[usize],
    options: StabilityOptions,
) -> Result<StabilityReport> {
    let supports: Vec<usize> = n_values.iter().map(|&n| family.perturbation_support(n)).collect();
    let local = supports.windows(2).all(|w| w[0] == w[1]);
    if !local && !options.force_nonlocal {
        return Err(Error::Precondition(format!(
            "perturbation support {supports:?} grows with N; it is not localized"
        )));
    }

    let points = n_values
        .par_iter()
        .zip(&supports)
        .map(|(&n, &support)| {
            let base = family.tensor(n, false)?;
            let phi = find_pointer_map(&base)?;
            let ln_error_baseline = ln_max_pointer_error(&base, &phi)?;
            let ln_error_perturbed = if support == 0 {
                ln_error_baseline
            } else {
                ln_max_pointer_error(&family.tensor(n, true)?, &phi)?
            };
            Ok(StabilityPoint {
                n,
                support,
                ln_error_baseline,
                ln_error_perturbed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let baseline = fit_decay_points(&points.iter().map(|p| (p.n, p.ln_error_baseline)).collect::<Vec<_>>())?;
    let c_base = baseline.decay_constant();
    let mut notes = Vec::new();
    if !local {
        notes.push(format!("perturbation support {supports:?} is not localized"));
    }
    let perturbed = match fit_decay_points(&points.iter().map(|p| (p.n, p.ln_error_perturbed)).collect::<Vec<_>>()) {
        Ok(fit) => Some(fit),
        Err(e) => {
            notes.push(format!("perturbed sweep could not be fitted: {e}"));
            None
        }
    };
    let relative_shift = perturbed.as_ref().map(|p| (p.decay_constant() / c_base - 1.0).abs());
    let floor = (1.0 - options.band) * c_base;
    let bound_holds = c_base > 0.0
        && points
            .iter()
            .all(|p| p.ln_error_perturbed <= -floor * p.n as f64);
    let exponential = perturbed.as_ref().is_some_and(DecayFit::is_exponential);
    if !exponential {
        notes.push("perturbed sweep is not exponential".into());
    }
    let within_band = relative_shift.is_some_and(|s| s <= options.band);
    let passed = local && baseline.is_exponential() && exponential && within_band && bound_holds;
    Ok(StabilityReport {
        points,
        baseline,
        perturbed,
        local,
        relative_shift,
        bound_holds,
        passed,
        notes,
    })
}
