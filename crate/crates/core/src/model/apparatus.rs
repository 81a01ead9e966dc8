use std::collections::BTreeSet;

use faer::MatRef;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

use super::system::HERMITIAN_TOL;

pub const PARTITION_TOL: f64 = 1e-12;
pub const STATE_TOL: f64 = 1e-12;

/// Largest admissible `n · dim_K` for the dense backend.
pub const DENSE_CAP: usize = 1 << 14;

/// One phase-cell projector `Π_α`.
#[derive(Debug, Clone)]
pub enum CellProjector {
    /// Projector onto the span of the listed orthonormal basis vectors.
    BasisIndices(Vec<usize>),
    Matrix(CMat),
}

impl CellProjector {
    pub fn rank(&self) -> usize {
        match self {
            CellProjector::BasisIndices(ix) => ix.len(),
            CellProjector::Matrix(m) => linalg::trace(m.as_ref()).re.round() as usize,
        }
    }

    fn to_dense(&self, dim: usize) -> CMat {
        match self {
            CellProjector::BasisIndices(ix) => {
                let mut m = linalg::zeros(dim);
                for &i in ix {
                    m[(i, i)] = linalg::ONE;
                }
                m
            }
            CellProjector::Matrix(m) => m.clone(),
        }
    }

    /// `Tr(X Π)`
    pub fn trace_against(&self, x: MatRef<'_, Complex64>) -> Complex64 {
        match self {
            CellProjector::BasisIndices(ix) => ix.iter().map(|&i| x[(i, i)]).sum(),
            CellProjector::Matrix(p) => linalg::trace_of_product(x, p.as_ref()),
        }
    }
}

/// Orthogonal resolution of the identity `{Π_α}` into phase cells.
#[derive(Debug, Clone)]
pub struct PhaseCellPartition {
    dim: usize,
    projectors: Vec<CellProjector>,
}

impl PhaseCellPartition {
    /// Validates `Π_α Π_β = δ_αβ Π_α` and `Σ_α Π_α = I`.
    pub fn new(dim: usize, projectors: Vec<CellProjector>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::Structural("partition has no cells".into()));
        }
        let all_indexed = projectors
            .iter()
            .all(|p| matches!(p, CellProjector::BasisIndices(_)));
        if all_indexed {
            let mut seen = BTreeSet::new();
            for (alpha, p) in projectors.iter().enumerate() {
                if let CellProjector::BasisIndices(ix) = p {
                    for &i in ix {
                        if i >= dim {
                            return Err(Error::Structural(format!(
                                "cell {alpha} references basis index {i} outside dimension {dim}"
                            )));
                        }
                        if !seen.insert(i) {
                            return Err(Error::Structural(format!(
                                "basis index {i} appears in more than one cell"
                            )));
                        }
                    }
                }
            }
            if seen.len() != dim {
                return Err(Error::Structural(format!(
                    "cells cover {} of {dim} basis vectors; Σ Π_α ≠ I",
                    seen.len()
                )));
            }
        } else {
            let dense: Vec<CMat> = projectors.iter().map(|p| p.to_dense(dim)).collect();
            let mut total = linalg::zeros(dim);
            for (a, pa) in dense.iter().enumerate() {
                if pa.nrows() != dim || pa.ncols() != dim {
                    return Err(Error::Structural(format!(
                        "projector {a} is not {dim}x{dim}"
                    )));
                }
                if linalg::hermitian_deviation(pa.as_ref()) > PARTITION_TOL {
                    return Err(Error::Structural(format!("projector {a} is not Hermitian")));
                }
                for (b, pb) in dense.iter().enumerate() {
                    let prod = pa * pb;
                    let expected = if a == b { pa.clone() } else { linalg::zeros(dim) };
                    let dev = linalg::max_abs_diff(prod.as_ref(), expected.as_ref());
                    if dev > PARTITION_TOL {
                        return Err(Error::Structural(format!(
                            "Π_{a} Π_{b} deviates from δ Π by {dev:e}"
                        )));
                    }
                }
                total += pa;
            }
            let dev = linalg::max_abs_diff(total.as_ref(), linalg::identity(dim).as_ref());
            if dev > PARTITION_TOL {
                return Err(Error::Structural(format!(
                    "Σ Π_α deviates from the identity by {dev:e}"
                )));
            }
        }
        Ok(PhaseCellPartition { dim, projectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_count(&self) -> usize {
        self.projectors.len()
    }

    pub fn projectors(&self) -> &[CellProjector] {
        &self.projectors
    }

    pub fn projector(&self, alpha: usize) -> &CellProjector {
        &self.projectors[alpha]
    }

    /// Dense `Π_α`.
    pub fn dense_projector(&self, alpha: usize) -> CMat {
        self.projectors[alpha].to_dense(self.dim)
    }

    /// Cells with relabelled order: new cell `α` is old cell `perm[α]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let projectors = perm.iter().map(|&a| self.projectors[a].clone()).collect();
        Self::new(self.dim, projectors)
    }
}

/// The apparatus: free Hamiltonian `K`, sector couplings `V_r`, initial state `Ω`, cells.
#[derive(Debug, Clone)]
pub struct Apparatus {
    free_hamiltonian: CMat,
    couplings: Vec<CMat>,
    initial_state: CMat,
    cells: PhaseCellPartition,
}

impl Apparatus {
    pub fn new(
        free_hamiltonian: CMat,
        couplings: Vec<CMat>,
        initial_state: CMat,
        cells: PhaseCellPartition,
    ) -> Result<Self> {
        let dim = free_hamiltonian.nrows();
        if !linalg::is_square(free_hamiltonian.as_ref()) {
            return Err(Error::Structural("K must be square".into()));
        }
        if linalg::hermitian_deviation(free_hamiltonian.as_ref()) > HERMITIAN_TOL {
            return Err(Error::Structural("K is not Hermitian".into()));
        }
        for (r, v) in couplings.iter().enumerate() {
            if v.nrows() != dim || v.ncols() != dim {
                return Err(Error::Structural(format!(
                    "V_{r} is {}x{}, expected {dim}x{dim}",
                    v.nrows(),
                    v.ncols()
                )));
            }
            let dev = linalg::hermitian_deviation(v.as_ref());
            if dev > HERMITIAN_TOL {
                return Err(Error::Structural(format!(
                    "V_{r} is not Hermitian (max deviation {dev:e})"
                )));
            }
        }
        if initial_state.nrows() != dim || initial_state.ncols() != dim {
            return Err(Error::Structural("Ω has the wrong dimension".into()));
        }
        check_density_matrix(initial_state.as_ref(), STATE_TOL)?;
        if cells.dim() != dim {
            return Err(Error::Structural(format!(
                "cells partition dimension {} but apparatus has dimension {dim}",
                cells.dim()
            )));
        }
        if cells.cell_count() != couplings.len() {
            return Err(Error::Structural(format!(
                "{} cells for {} sectors; pointer readings must match the microsystem",
                cells.cell_count(),
                couplings.len()
            )));
        }
        Ok(Apparatus {
            free_hamiltonian,
            couplings,
            initial_state,
            cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.free_hamiltonian.nrows()
    }

    pub fn sector_count(&self) -> usize {
        self.couplings.len()
    }

    pub fn free_hamiltonian(&self) -> MatRef<'_, Complex64> {
        self.free_hamiltonian.as_ref()
    }

    pub fn coupling(&self, r: usize) -> MatRef<'_, Complex64> {
        self.couplings[r].as_ref()
    }

    pub fn initial_state(&self) -> MatRef<'_, Complex64> {
        self.initial_state.as_ref()
    }

    pub fn cells(&self) -> &PhaseCellPartition {
        &self.cells
    }

    /// Same apparatus with a different initial state.
    pub fn with_initial_state(&self, omega: CMat) -> Result<Self> {
        Self::new(
            self.free_hamiltonian.clone(),
            self.couplings.clone(),
            omega,
            self.cells.clone(),
        )
    }
}

/// Hermitian, unit trace and positive semidefinite, all to `tol`.
pub fn check_density_matrix(rho: MatRef<'_, Complex64>, tol: f64) -> Result<()> {
    let dev = linalg::hermitian_deviation(rho);
    if dev > tol {
        return Err(Error::Structural(format!(
            "state is not Hermitian (max deviation {dev:e})"
        )));
    }
    let tr = linalg::trace(rho);
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::Structural(format!("state trace is {tr}, expected 1")));
    }
    let min_eig = if linalg::is_diagonal(rho) {
        (0..rho.nrows()).map(|i| rho[(i, i)].re).fold(f64::INFINITY, f64::min)
    } else {
        linalg::hermitian_eigenvalues(rho)?[0]
    };
    if min_eig < -tol {
        return Err(Error::Structural(format!(
            "state is not positive semidefinite (smallest eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}
