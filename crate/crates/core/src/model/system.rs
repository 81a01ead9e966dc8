use std::collections::HashSet;

use faer::MatRef;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// The measured system: energy levels `ε_r` of its eigenbasis `u_1..u_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroSystem {
    energies: Vec<f64>,
    labels: Vec<String>,
}

impl MicroSystem {
    pub fn new(energies: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::Structural("microsystem needs at least one level".into()));
        }
        if labels.len() != energies.len() {
            return Err(Error::Structural(format!(
                "{} labels for {} energy levels",
                labels.len(),
                energies.len()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Structural("energy levels must be finite".into()));
        }
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::Structural("eigenbasis labels must be unique".into()));
        }
        Ok(MicroSystem { energies, labels })
    }

    /// Levels labelled `u1..un`.
    pub fn with_energies(energies: Vec<f64>) -> Result<Self> {
        let labels = (1..=energies.len()).map(|r| format!("u{r}")).collect();
        Self::new(energies, labels)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A self-adjoint observable of the microsystem, in the `u`-basis.
#[derive(Debug, Clone)]
pub struct ObservableS {
    matrix: CMat,
}

impl ObservableS {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !linalg::is_square(matrix.as_ref()) {
            return Err(Error::Structural("observable must be square".into()));
        }
        let dev = linalg::hermitian_deviation(matrix.as_ref());
        if dev > HERMITIAN_TOL {
            return Err(Error::Structural(format!(
                "observable is not Hermitian (max |A - A†| = {dev:e})"
            )));
        }
        Ok(ObservableS { matrix })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        ObservableS {
            matrix: linalg::from_real_diag(values),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, Complex64> {
        self.matrix.as_ref()
    }

    /// `(u_r, A u_s)`
    pub fn element(&self, r: usize, s: usize) -> Complex64 {
        self.matrix[(r, s)]
    }
}

/// Amplitudes `c_r` of the initial vector `ψ = Σ c_r u_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitudes(Vec<Complex64>);

impl Amplitudes {
    pub fn new(c: Vec<Complex64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Precondition("amplitude list is empty".into()));
        }
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Precondition(format!(
                "amplitudes are not normalized: Σ|c_r|² = {norm}"
            )));
        }
        Ok(Amplitudes(c))
    }

    pub fn from_real(c: &[f64]) -> Result<Self> {
        Self::new(c.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The basis vector `u_r`.
    pub fn basis(n: usize, r: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[r] = Complex64::new(1.0, 0.0);
        Amplitudes(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Amplitudes {
    type Output = Complex64;

    fn index(&self, r: usize) -> &Complex64 {
        &self.0[r]
    }
}
