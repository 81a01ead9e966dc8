use crate::error::{Error, Result};
use crate::logspace::LogValue;
use crate::model::FTensor;

use super::pointer::PointerMap;

/// `1 - F_{r,r;φ^{-1}(r)}` below this counts as an exact pointer.
pub const EXACT_TOL: f64 = 1e-10;
/// Largest entrywise deviation from the ideal form tolerated once the exact condition holds.
pub const IDEAL_FORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactConditionReport {
    pub holds: bool,
    /// `max_r |1 - F_{r,r;φ^{-1}(r)}|`
    pub residual: f64,
    /// `max |F_{r,s;α} - δ_{r,φ(α)} δ_{s,φ(α)}|`
    pub ideal_deviation: f64,
    /// When the condition holds, whether the whole tensor has the ideal form.
    pub ideal_form_consistent: bool,
}

/// Pointer errors `ε_r = Σ_{β≠φ^{-1}(r)} F_{r,r;β}` in log form.
pub fn pointer_errors(f: &FTensor, phi: &PointerMap) -> Result<Vec<LogValue>> {
    if f.n() != phi.n() {
        return Err(Error::Structural(format!(
            "tensor with n = {} against pointer map with n = {}",
            f.n(),
            phi.n()
        )));
    }
    Ok((0..f.n()).map(|r| f.mass_outside(r, phi.cell_of_sector(r))).collect())
}

/// `ln max |F_{r,s;α} - ideal|`, using the pointer errors for the entries that should equal one.
fn ln_ideal_deviation(f: &FTensor, phi: &PointerMap, ln_errors: &[f64]) -> f64 {
    let n = f.n();
    let mut worst = f64::NEG_INFINITY;
    for r in 0..n {
        for s in 0..n {
            for a in 0..n {
                let l = if r == s && phi.sector_of_cell(a) == r {
                    ln_errors[r]
                } else {
                    f.log_entry(r, s, a).ln_abs
                };
                worst = worst.max(l);
            }
        }
    }
    worst
}

pub fn check_exact_condition(f: &FTensor, phi: &PointerMap) -> Result<ExactConditionReport> {
    let errors = pointer_errors(f, phi)?;
    let ln_errors: Vec<f64> = errors.iter().map(|e| e.ln_abs).collect();
    let residual = ln_errors.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();
    let ideal_deviation = ln_ideal_deviation(f, phi, &ln_errors).exp();
    let holds = residual < EXACT_TOL;
    Ok(ExactConditionReport {
        holds,
        residual,
        ideal_deviation,
        ideal_form_consistent: !holds || ideal_deviation < IDEAL_FORM_TOL,
    })
}

/// Outcome of the exponential pointer condition `0 ≤ ε_r ≤ exp(-cN)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVerdict {
    pub n_particles: usize,
    /// The decay constant the verdict was evaluated against.
    pub bound_constant: f64,
    pub ln_errors: Vec<f64>,
    pub satisfied: bool,
    /// `ln max_{r≠s} |Σ_α F_{r,s;α}|`: controls the interference terms of `E(A)`.
    pub ln_expectation_residual: f64,
    /// `ln max |F - F_ideal|`: controls the conditional expectations.
    pub ln_conditional_residual: f64,
}

impl MeasurementVerdict {
    pub fn errors(&self) -> Vec<f64> {
        self.ln_errors.iter().map(|l| l.exp()).collect()
    }

    pub fn ln_max_error(&self) -> f64 {
        self.ln_errors.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `K` with `residual = K exp(-cN/2)`; `ln K` is returned to survive extreme `N`.
    pub fn ln_correction_constant(&self) -> f64 {
        self.ln_expectation_residual.max(self.ln_conditional_residual)
            + 0.5 * self.bound_constant * self.n_particles as f64
    }
}

pub fn check_weakened_condition(
    f: &FTensor,
    phi: &PointerMap,
    n_particles: usize,
    c: f64,
) -> Result<MeasurementVerdict> {
    if n_particles == 0 {
        return Err(Error::Precondition("particle count must be at least 1".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Precondition(format!("decay constant must be positive, got {c}")));
    }
    let ln_errors: Vec<f64> = pointer_errors(f, phi)?.iter().map(|e| e.ln_abs).collect();
    let ln_bound = -c * n_particles as f64;
    let satisfied = ln_errors.iter().all(|&l| l <= ln_bound);
    let (ln_coherence, ln_conditional) = ln_von_neumann_residuals(f, phi)?;
    Ok(MeasurementVerdict {
        n_particles,
        bound_constant: c,
        ln_errors,
        satisfied,
        ln_expectation_residual: ln_coherence,
        ln_conditional_residual: ln_conditional,
    })
}

/// `(ln max_{r≠s} |Σ_α F_{r,s;α}|, ln max |F - F_ideal|)`: the deviations that control
/// the unconditional and the conditional expectation reconstructions.
pub fn ln_von_neumann_residuals(f: &FTensor, phi: &PointerMap) -> Result<(f64, f64)> {
    let ln_errors: Vec<f64> = pointer_errors(f, phi)?.iter().map(|e| e.ln_abs).collect();
    let n = f.n();
    let mut ln_coherence = f64::NEG_INFINITY;
    for r in 0..n {
        for s in 0..n {
            if r != s {
                ln_coherence = ln_coherence.max(f.cell_sum(r, s).ln_abs);
            }
        }
    }
    Ok((ln_coherence, ln_ideal_deviation(f, phi, &ln_errors)))
}

/// `ln max_r ε_r` for a tensor and map.
pub fn ln_max_pointer_error(f: &FTensor, phi: &PointerMap) -> Result<f64> {
    let errors = pointer_errors(f, phi)?;
    Ok(errors.iter().map(|e| e.ln_abs).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ideal_tensor;
    use num_complex::Complex64;

    #[test]
    fn ideal_tensor_is_exact_and_always_satisfied() {
        let f = ideal_tensor(&[1, 2, 0], 0.0);
        let phi = PointerMap::from_phi(vec![1, 2, 0]).unwrap();
        let rep = check_exact_condition(&f, &phi).unwrap();
        assert!(rep.holds && rep.ideal_form_consistent);
        assert_eq!(rep.residual, 0.0);
        for c in [1e-3, 1.0, 50.0] {
            let v = check_weakened_condition(&f, &phi, 100, c).unwrap();
            assert!(v.satisfied);
            assert_eq!(v.errors(), vec![0.0; 3]);
        }
    }

    #[test]
    fn unevolved_state_fails_exact_condition() {
        // Every sector sees the same cell statistics before any coupling acts.
        let f = FTensor::from_fn(2, 0.0, |_, _, a| Complex64::new(if a == 0 { 1.0 } else { 0.0 }, 0.0));
        let rep = check_exact_condition(&f, &PointerMap::identity(2)).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.residual, 1.0);
    }

    #[test]
    fn tiny_errors_are_compared_in_log_space() {
        let eps = 1e-200;
        let f = FTensor::from_fn(2, 0.0, |r, s, a| {
            let v = match (r == s, r == a) {
                (true, true) => 1.0 - eps,
                (true, false) => eps,
                _ => 0.0,
            };
            Complex64::new(v, 0.0)
        });
        let phi = PointerMap::identity(2);
        let v = check_weakened_condition(&f, &phi, 100, 4.0).unwrap();
        assert!((v.ln_max_error() - eps.ln()).abs() < 1e-9);
        assert!(v.satisfied);
        assert!(!check_weakened_condition(&f, &phi, 100, 5.0).unwrap().satisfied);
        assert!(check_exact_condition(&f, &phi).unwrap().holds);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = ideal_tensor(&[0, 1], 0.0);
        let phi = PointerMap::identity(2);
        assert!(check_weakened_condition(&f, &phi, 0, 1.0).is_err());
        assert!(check_weakened_condition(&f, &phi, 10, 0.0).is_err());
        assert!(pointer_errors(&f, &PointerMap::identity(3)).is_err());
    }
}
