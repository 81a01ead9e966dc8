use faer::MatRef;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Propagator};

use super::apparatus::{Apparatus, DENSE_CAP};
use super::system::{MicroSystem, HERMITIAN_TOL};

/// `K_r = K + V_r + ε_r I` for every sector.
pub fn sector_hamiltonians(sys: &MicroSystem, app: &Apparatus) -> Result<Vec<CMat>> {
    if sys.dim() != app.sector_count() {
        return Err(Error::Structural(format!(
            "microsystem has {} levels but apparatus has {} couplings",
            sys.dim(),
            app.sector_count()
        )));
    }
    let dim = app.dim();
    sys.energies()
        .iter()
        .enumerate()
        .map(|(r, &eps)| {
            let v = app.coupling(r);
            if v.nrows() != dim {
                return Err(Error::Structural(format!("V_{r} does not match K")));
            }
            let k = app.free_hamiltonian();
            Ok(CMat::from_fn(dim, dim, |i, j| {
                let shift = if i == j { eps } else { 0.0 };
                k[(i, j)] + v[(i, j)] + Complex64::new(shift, 0.0)
            }))
        })
        .collect()
}

/// Conditional apparatus states `Ω_{r,s}(t) = U_r(t)^† Ω U_s(t)`, `U_r(t) = exp(i K_r t)`.
#[derive(Debug, Clone)]
pub struct EvolvedSectorStates {
    t: f64,
    n: usize,
    omega: Vec<CMat>,
}

impl EvolvedSectorStates {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn sector_count(&self) -> usize {
        self.n
    }

    pub fn apparatus_dim(&self) -> usize {
        self.omega[0].nrows()
    }

    pub fn get(&self, r: usize, s: usize) -> MatRef<'_, Complex64> {
        self.omega[r * self.n + s].as_ref()
    }

    /// Largest violations of `Tr Ω_rr = 1`, `Ω_rs^† = Ω_sr`, and of the
    /// spectrum of `Ω_rr` lying in `[0, 1]`.
    pub fn invariant_violations(&self) -> Result<StateInvariantViolations> {
        let mut out = StateInvariantViolations::default();
        for r in 0..self.n {
            let rr = self.get(r, r);
            let tr = linalg::trace(rr);
            out.trace = out.trace.max((tr - linalg::ONE).norm());
            let eig = linalg::hermitian_eigenvalues(rr)?;
            let lo = eig.first().copied().unwrap_or(0.0);
            let hi = eig.last().copied().unwrap_or(0.0);
            out.spectrum = out.spectrum.max((-lo).max(0.0)).max((hi - 1.0).max(0.0));
            for s in 0..self.n {
                let a = self.get(r, s);
                let b = self.get(s, r);
                let d = CMat::from_fn(a.nrows(), a.ncols(), |i, j| b[(j, i)].conj());
                out.adjoint = out.adjoint.max(linalg::max_abs_diff(a, d.as_ref()));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StateInvariantViolations {
    pub trace: f64,
    pub adjoint: f64,
    pub spectrum: f64,
}

/// Sector propagators `exp(i K_r t)`.
pub fn sector_propagators(sys: &MicroSystem, app: &Apparatus, t: f64) -> Result<Vec<Propagator>> {
    let ks = sector_hamiltonians(sys, app)?;
    ks.iter()
        .enumerate()
        .map(|(r, k)| {
            let dev = linalg::hermitian_deviation(k.as_ref());
            if dev > HERMITIAN_TOL {
                return Err(Error::Structural(format!(
                    "K_{r} is not Hermitian (max deviation {dev:e})"
                )));
            }
            linalg::hermitian_propagator(k.as_ref(), t)
        })
        .collect()
}

pub fn check_dense_capacity(n: usize, dim: usize) -> Result<()> {
    let size = n.saturating_mul(dim);
    if size > DENSE_CAP {
        return Err(Error::Capacity(format!(
            "dense backend holds n·dim_K ≤ {DENSE_CAP}, requested {n}·{dim}"
        )));
    }
    Ok(())
}

pub fn evolve_sectors(sys: &MicroSystem, app: &Apparatus, t: f64) -> Result<EvolvedSectorStates> {
    check_dense_capacity(sys.dim(), app.dim())?;
    let props = sector_propagators(sys, app, t)?;
    let n = props.len();
    let omega0 = app.initial_state();
    let mut omega = Vec::with_capacity(n * n);
    for pr in &props {
        for ps in &props {
            omega.push(linalg::sandwich(pr, omega0, ps));
        }
    }
    Ok(EvolvedSectorStates { t, n, omega })
}
