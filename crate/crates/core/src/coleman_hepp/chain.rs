use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// 2×2 complex matrix in row-major order; basis index 0 is spin up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([
        [Complex64 { re: 1.0, im: 0.0 }, ZERO],
        [ZERO, Complex64 { re: 1.0, im: 0.0 }],
    ]);

    pub fn real_diagonal(up: f64, down: f64) -> Self {
        Mat2([[Complex64::new(up, 0.0), ZERO], [ZERO, Complex64::new(down, 0.0)]])
    }

    /// `(I + m σ_z) / 2`
    pub fn polarized(m: f64) -> Self {
        Self::real_diagonal(0.5 * (1.0 + m), 0.5 * (1.0 - m))
    }

    /// `exp(iθσ_x/2)`. Written through `π - θ` so that `θ = π` gives an exactly zero diagonal.
    pub fn rotation(theta: f64) -> Self {
        let half = 0.5 * (PI - theta);
        let c = Complex64::new(half.sin(), 0.0);
        let is = Complex64::new(0.0, half.cos());
        Mat2([[c, is], [is, c]])
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn adjoint(&self) -> Mat2 {
        let a = &self.0;
        Mat2([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Basis swap `σ_x ρ σ_x`.
    pub fn flipped(&self) -> Mat2 {
        let a = &self.0;
        Mat2([[a[1][1], a[1][0]], [a[0][1], a[0][0]]])
    }

    pub fn check_density(&self, tol: f64) -> Result<()> {
        let a = &self.0;
        let herm = (a[0][1] - a[1][0].conj()).norm() + a[0][0].im.abs() + a[1][1].im.abs();
        if herm > tol {
            return Err(Error::Structural(format!("site state {self:?} is not Hermitian")));
        }
        if (self.trace().re - 1.0).abs() > tol {
            return Err(Error::Structural(format!("site state {self:?} has trace {}", self.trace().re)));
        }
        let det = a[0][0].re * a[1][1].re - a[0][1].norm_sqr();
        if a[0][0].re < -tol || a[1][1].re < -tol || det < -tol {
            return Err(Error::Structural(format!("site state {self:?} is not positive semidefinite")));
        }
        Ok(())
    }
}

/// Finite chain measured by a passing particle.
///
/// Sector 0 (spin up, "+") leaves the chain alone; sector 1 (spin down, "−")
/// rotates every passed site by `exp(iθσ_x/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub n: usize,
    pub m0: f64,
    pub theta: f64,
    pub site_overrides: BTreeMap<usize, Mat2>,
    /// `(ε_+, ε_−)`
    pub energies: (f64, f64),
    pub t: f64,
}

pub const SITE_STATE_TOL: f64 = 1e-12;

impl ChainSpec {
    pub fn new(n: usize, m0: f64, theta: f64) -> Result<Self> {
        let spec = ChainSpec {
            n,
            m0,
            theta,
            site_overrides: BTreeMap::new(),
            energies: (0.0, 0.0),
            t: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_n(&self, n: usize) -> Self {
        ChainSpec { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Precondition("the chain needs at least one site".into()));
        }
        if !(self.m0 > 0.0 && self.m0 <= 1.0) {
            return Err(Error::Precondition(format!("polarization m0 = {} is not in (0, 1]", self.m0)));
        }
        if !(self.theta > 0.0 && self.theta < TAU) {
            return Err(Error::Precondition(format!("rotation angle {} is not in (0, 2π)", self.theta)));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::Precondition(format!("traversal time {} must be positive", self.t)));
        }
        if !self.energies.0.is_finite() || !self.energies.1.is_finite() {
            return Err(Error::Precondition("sector energies must be finite".into()));
        }
        for (&k, rho) in &self.site_overrides {
            if k >= self.n {
                return Err(Error::Precondition(format!("override for site {k} on a chain of {}", self.n)));
            }
            rho.check_density(SITE_STATE_TOL)?;
        }
        Ok(())
    }

    pub fn bulk_state(&self) -> Mat2 {
        Mat2::polarized(self.m0)
    }

    pub fn site_state(&self, k: usize) -> Mat2 {
        self.site_overrides.get(&k).copied().unwrap_or_else(|| self.bulk_state())
    }

    pub fn energy(&self, r: usize) -> f64 {
        if r == 0 {
            self.energies.0
        } else {
            self.energies.1
        }
    }

    /// Single-site propagator of sector `r` on a passed site.
    pub fn site_rotation(&self, r: usize) -> Mat2 {
        if r == 0 {
            Mat2::IDENTITY
        } else {
            Mat2::rotation(self.theta)
        }
    }
}
