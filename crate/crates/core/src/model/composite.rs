//! Direct evaluation on the full composite space `H ⊗ K`.
//!
//! Builds `H_c = Σ_r P(u_r) ⊗ K_r`, exponentiates it as one matrix and forms
//! `Φ(t) = U_c(t)^† (P(ψ) ⊗ Ω) U_c(t)`. This path shares no code with the
//! per-sector evolution and is the reference the F-tensor formulas are checked
//! against.

use faer::MatRef;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

use super::apparatus::Apparatus;
use super::evolution::sector_hamiltonians;
use super::system::{Amplitudes, MicroSystem, ObservableS};

/// Largest composite dimension the oracle accepts.
pub const COMPOSITE_CAP: usize = 1024;

#[derive(Debug, Clone)]
pub struct CompositeState {
    n: usize,
    dim_k: usize,
    phi_t: CMat,
}

impl CompositeState {
    pub fn evolve(sys: &MicroSystem, app: &Apparatus, c: &Amplitudes, t: f64) -> Result<Self> {
        let n = sys.dim();
        let dim_k = app.dim();
        let total = n * dim_k;
        if total > COMPOSITE_CAP {
            return Err(Error::Capacity(format!(
                "composite oracle handles n·dim_K ≤ {COMPOSITE_CAP}, got {total}"
            )));
        }
        if c.dim() != n {
            return Err(Error::Structural("amplitudes do not match the microsystem".into()));
        }
        let ks = sector_hamiltonians(sys, app)?;
        let mut hc = linalg::zeros(total);
        for (r, k) in ks.iter().enumerate() {
            for i in 0..dim_k {
                for j in 0..dim_k {
                    hc[(r * dim_k + i, r * dim_k + j)] = k[(i, j)];
                }
            }
        }
        let uc = linalg::hermitian_propagator(hc.as_ref(), t)?.to_dense();
        let psi = CMat::from_fn(n, n, |r, s| c[r] * c[s].conj());
        let phi0 = linalg::kron(psi.as_ref(), app.initial_state());
        let phi_t = uc.adjoint() * &phi0 * &uc;
        Ok(CompositeState { n, dim_k, phi_t })
    }

    pub fn density_matrix(&self) -> MatRef<'_, Complex64> {
        self.phi_t.as_ref()
    }

    /// `Tr(Φ(t) X)` for an operator on `H ⊗ K`.
    pub fn expectation(&self, x: MatRef<'_, Complex64>) -> Complex64 {
        linalg::trace_of_product(self.phi_t.as_ref(), x)
    }

    /// `Tr(Φ(t) (A ⊗ M))`.
    pub fn product_expectation(&self, a: MatRef<'_, Complex64>, m: MatRef<'_, Complex64>) -> Complex64 {
        debug_assert_eq!(a.nrows(), self.n);
        debug_assert_eq!(m.nrows(), self.dim_k);
        self.expectation(linalg::kron(a, m).as_ref())
    }

    pub fn expectation_s(&self, a: &ObservableS) -> Complex64 {
        self.product_expectation(a.matrix(), linalg::identity(self.dim_k).as_ref())
    }

    pub fn weight(&self, app: &Apparatus, alpha: usize) -> Complex64 {
        let pi = app.cells().dense_projector(alpha);
        self.product_expectation(linalg::identity(self.n).as_ref(), pi.as_ref())
    }

    pub fn joint(&self, app: &Apparatus, a: &ObservableS, alpha: usize) -> Complex64 {
        let pi = app.cells().dense_projector(alpha);
        self.product_expectation(a.matrix(), pi.as_ref())
    }
}
