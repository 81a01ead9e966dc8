//! Expectation values of the composite state expressed through `F`.
//!
//! With `Φ(t)` having blocks `c_r c̄_s Ω_{r,s}(t)` in the `u`-basis,
//! `E(A ⊗ Π_α) = Σ_{r,s} c̄_r c_s (u_r, A u_s) F_{s,r;α}`. The tensor enters
//! with its sector indices swapped relative to the amplitude pair; by
//! Hermitian symmetry `F_{s,r;α}` is the conjugate of `F_{r,s;α}`.

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::ftensor::FTensor;
use super::system::{Amplitudes, ObservableS};

/// Imaginary parts above this are treated as evidence of an invalid tensor.
pub const IMAGINARY_TOL: f64 = 1e-10;
/// Cells lighter than this cannot be conditioned on.
pub const WEIGHT_FLOOR: f64 = 1e-12;

fn check_dims(f: &FTensor, c: &Amplitudes, a: Option<&ObservableS>) -> Result<()> {
    if c.dim() != f.n() {
        return Err(Error::Structural(format!(
            "{} amplitudes for an F tensor with n = {}",
            c.dim(),
            f.n()
        )));
    }
    if let Some(a) = a {
        if a.dim() != f.n() {
            return Err(Error::Structural(format!(
                "observable of dimension {} for n = {}",
                a.dim(),
                f.n()
            )));
        }
    }
    Ok(())
}

fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAGINARY_TOL * z.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "{what} has imaginary residual {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `E(A ⊗ Π_α)` as a complex number (no realness check).
pub fn joint_expectation_raw(f: &FTensor, c: &Amplitudes, a: &ObservableS, alpha: usize) -> Complex64 {
    let n = f.n();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for s in 0..n {
            acc += c[r].conj() * c[s] * a.element(r, s) * f.get(s, r, alpha);
        }
    }
    acc
}

/// `E(A ⊗ Π_α)`.
pub fn joint_expectation(f: &FTensor, c: &Amplitudes, a: &ObservableS, alpha: usize) -> Result<f64> {
    check_dims(f, c, Some(a))?;
    real_part(joint_expectation_raw(f, c, a, alpha), "E(A ⊗ Π_α)")
}

/// `E(A) = Σ_r |c_r|² (u_r, A u_r) + Σ_{r≠s} Σ_α c̄_r c_s (u_r, A u_s) F_{s,r;α}`.
pub fn expectation_s(f: &FTensor, c: &Amplitudes, a: &ObservableS) -> Result<f64> {
    check_dims(f, c, Some(a))?;
    let n = f.n();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..n {
        acc += c[r].norm_sqr() * a.element(r, r);
    }
    for r in 0..n {
        for s in 0..n {
            if r == s {
                continue;
            }
            let coherence: Complex64 = (0..n).map(|alpha| f.get(s, r, alpha)).sum();
            acc += c[r].conj() * c[s] * a.element(r, s) * coherence;
        }
    }
    real_part(acc, "E(A)")
}

/// Cell probabilities `w_α = E(I ⊗ Π_α) = Σ_r |c_r|² F_{r,r;α}`, clamped at zero.
pub fn pointer_weights(f: &FTensor, c: &Amplitudes) -> Result<Vec<f64>> {
    check_dims(f, c, None)?;
    let n = f.n();
    (0..n)
        .map(|alpha| {
            let acc: Complex64 = (0..n).map(|r| c[r].norm_sqr() * f.get(r, r, alpha)).sum();
            let w = real_part(acc, "w_α")?;
            if w < -1e-12 {
                return Err(Error::Numerical(format!("cell {alpha} has negative weight {w:e}")));
            }
            Ok(w.max(0.0))
        })
        .collect()
}

/// `E(A | K_α) = E(A ⊗ Π_α) / w_α`.
pub fn conditional_expectation(
    f: &FTensor,
    c: &Amplitudes,
    a: &ObservableS,
    alpha: usize,
) -> Result<f64> {
    check_dims(f, c, Some(a))?;
    if alpha >= f.n() {
        return Err(Error::Precondition(format!("cell index {alpha} out of range")));
    }
    let w = pointer_weights(f, c)?[alpha];
    if w <= WEIGHT_FLOOR {
        return Err(Error::NullMacrostate { cell: alpha, weight: w });
    }
    let num = real_part(joint_expectation_raw(f, c, a, alpha), "E(A ⊗ Π_α)")?;
    Ok(num / w)
}
