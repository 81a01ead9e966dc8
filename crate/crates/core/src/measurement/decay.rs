use crate::error::{Error, Result};
use crate::fit;
use crate::model::FTensor;

use super::conditions::ln_max_pointer_error;
use super::pointer::PointerMap;

pub const MIN_POINTS: usize = 4;
/// Required ratio between the largest and smallest `N` of a sweep.
pub const MIN_SPAN: f64 = 4.0;
/// Fits below this coefficient of determination are not called exponential.
pub const EXPONENTIAL_R_SQUARED: f64 = 0.99;

/// Least-squares line through `(N, ln max_r ε_r(N))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Points used by the fit, sorted by `N`.
    pub sweep: Vec<(usize, f64)>,
    /// `N` values dropped because their error was exactly zero.
    pub excluded: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub warnings: Vec<String>,
}

impl DecayFit {
    /// Empirical `c = -slope`.
    pub fn decay_constant(&self) -> f64 {
        -self.slope
    }

    pub fn is_exponential(&self) -> bool {
        self.slope < 0.0 && self.r_squared >= EXPONENTIAL_R_SQUARED
    }

    /// Largest `c` with `ε(N) ≤ exp(-cN)` at every swept point.
    pub fn certified_constant(&self) -> f64 {
        self.sweep
            .iter()
            .map(|&(n, l)| -l / n as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Fits `(N, ln ε)` pairs; points with `ε = 0` are excluded with a warning.
pub fn fit_decay_points(points: &[(usize, f64)]) -> Result<DecayFit> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.0);
    let mut warnings = Vec::new();
    let mut excluded = Vec::new();
    let mut sweep = Vec::new();
    for &(n, l) in &sorted {
        if l == f64::NEG_INFINITY {
            excluded.push(n);
            warnings.push(format!("N = {n}: pointer error is exactly zero, point excluded"));
        } else if l.is_nan() {
            return Err(Error::Fit(format!("N = {n}: pointer error is not a number")));
        } else {
            sweep.push((n, l));
        }
    }
    let mut distinct: Vec<usize> = sweep.iter().map(|p| p.0).collect();
    distinct.dedup();
    if distinct.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "{} usable N values, at least {MIN_POINTS} are needed",
            distinct.len()
        )));
    }
    let span = *distinct.last().unwrap() as f64 / distinct[0].max(1) as f64;
    if span < MIN_SPAN {
        return Err(Error::Precondition(format!(
            "N values span a factor of {span}, at least {MIN_SPAN} is needed"
        )));
    }
    let x: Vec<f64> = sweep.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = sweep.iter().map(|p| p.1).collect();
    let (intercept, slope, r_squared) = fit::line(&x, &y)?;
    let fit = DecayFit {
        sweep,
        excluded,
        slope,
        intercept,
        r_squared: r_squared.clamp(0.0, 1.0),
        warnings,
    };
    Ok(fit)
}

pub fn fit_decay_rate(sweep: &[(usize, &FTensor, &PointerMap)]) -> Result<DecayFit> {
    let points = sweep
        .iter()
        .map(|&(n, f, phi)| Ok((n, ln_max_pointer_error(f, phi)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_decay_points(&points)
}
