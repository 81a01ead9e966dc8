use std::fmt;

use crate::error::Result;
use crate::linalg::{self, CMat};

use super::ftensor::FTensor;

pub const PROPERTY_TOL: f64 = 1e-9;

/// Largest violation of each algebraic property of `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FPropertyReport {
    /// `max_r |Σ_α F_{r,r;α} - 1|`
    pub normalization: f64,
    /// Distance of the diagonal entries from `[0, 1]`, including imaginary parts.
    pub bounds: f64,
    /// `max |F_{r,s;α} - conj F_{s,r;α}|`
    pub symmetry: f64,
    /// `max_α max(0, -λ_min([F_{r,s;α}]_{r,s}))`
    pub positivity: f64,
    /// `max max(0, |F_{r,s;α}|² - F_{r,r;α} F_{s,s;α})`
    pub cauchy_schwarz: f64,
}

impl FPropertyReport {
    pub fn max_violation(&self) -> f64 {
        self.normalization
            .max(self.bounds)
            .max(self.symmetry)
            .max(self.positivity)
            .max(self.cauchy_schwarz)
    }

    pub fn passed(&self) -> bool {
        self.max_violation() < PROPERTY_TOL
    }
}

impl fmt::Display for FPropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "normalization {:.3e}, bounds {:.3e}, symmetry {:.3e}, positivity {:.3e}, cauchy-schwarz {:.3e}",
            self.normalization, self.bounds, self.symmetry, self.positivity, self.cauchy_schwarz
        )
    }
}

pub fn check_f_properties(f: &FTensor) -> Result<FPropertyReport> {
    let n = f.n();
    let mut report = FPropertyReport {
        normalization: 0.0,
        bounds: 0.0,
        symmetry: 0.0,
        positivity: 0.0,
        cauchy_schwarz: 0.0,
    };
    for r in 0..n {
        // Log-space sum keeps underflowed tails from registering as violations.
        let total = f.cell_sum(r, r).to_complex();
        report.normalization = report.normalization.max((total - linalg::ONE).norm());
        for a in 0..n {
            let z = f.get(r, r, a);
            let out_of_range = (-z.re).max(z.re - 1.0).max(0.0);
            report.bounds = report.bounds.max(out_of_range).max(z.im.abs());
        }
    }
    for a in 0..n {
        for r in 0..n {
            for s in 0..n {
                let frs = f.get(r, s, a);
                report.symmetry = report.symmetry.max((frs - f.get(s, r, a).conj()).norm());
                let excess = frs.norm_sqr() - f.get(r, r, a).re * f.get(s, s, a).re;
                report.cauchy_schwarz = report.cauchy_schwarz.max(excess.max(0.0));
            }
        }
        let g = CMat::from_fn(n, n, |r, s| f.get(r, s, a));
        let min_eig = linalg::hermitian_eigenvalues(g.as_ref())?[0];
        report.positivity = report.positivity.max((-min_eig).max(0.0));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ftensor::ideal_tensor;
    use num_complex::Complex64;

    #[test]
    fn ideal_tensor_passes() {
        let r = check_f_properties(&ideal_tensor(&[2, 0, 1], 0.0)).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(r.max_violation(), 0.0);
    }

    #[test]
    fn cauchy_schwarz_violation_reported() {
        let f = FTensor::from_fn(2, 0.0, |r, s, a| {
            let v = match (r, s, a) {
                (0, 1, 0) | (1, 0, 0) => 1.0,
                (0, 0, 0) | (1, 1, 0) => 0.1,
                (0, 0, 1) | (1, 1, 1) => 0.9,
                _ => 0.0,
            };
            Complex64::new(v, 0.0)
        });
        let r = check_f_properties(&f).unwrap();
        assert!(!r.passed());
        assert!((r.cauchy_schwarz - 0.99).abs() < 1e-12);
        assert!(r.positivity > 0.5);
        assert!(r.normalization < 1e-15);
    }
}
