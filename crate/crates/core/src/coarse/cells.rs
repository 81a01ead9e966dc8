use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{CellProjector, PhaseCellPartition};

use super::observable::IntensiveObservable;

/// Distance within which a value is treated as lying on an interval boundary.
pub const BOUNDARY_SNAP: f64 = 1e-12;

/// Equal-length intervals `J_α` tiling `[lo, hi]`, left-closed and right-open
/// except the last, which is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPartitionSpec {
    lo: f64,
    hi: f64,
    n_cells: usize,
    /// Cell index of each spectrum point, in spectrum order.
    point_cells: Vec<usize>,
    cell_means: Vec<Option<f64>>,
}

impl CellPartitionSpec {
    pub fn new(lo: f64, hi: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Precondition("at least one cell is required".into()));
        }
        if !(lo < hi) {
            return Err(Error::Precondition(format!("invalid range [{lo}, {hi}]")));
        }
        Ok(CellPartitionSpec {
            lo,
            hi,
            n_cells,
            point_cells: Vec::new(),
            cell_means: vec![None; n_cells],
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n_cells as f64
    }

    /// Endpoints of `J_α`.
    pub fn interval(&self, alpha: usize) -> (f64, f64) {
        let w = self.width();
        let a = self.lo + alpha as f64 * w;
        let b = if alpha + 1 == self.n_cells { self.hi } else { self.lo + (alpha + 1) as f64 * w };
        (a, b)
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        (0..self.n_cells).map(|a| self.interval(a)).collect()
    }

    /// Boundaries shared by two cells.
    pub fn interior_boundaries(&self) -> Vec<f64> {
        (1..self.n_cells).map(|a| self.interval(a).0).collect()
    }

    pub fn cell_of(&self, m: f64) -> Result<usize> {
        if !(self.lo - BOUNDARY_SNAP..=self.hi + BOUNDARY_SNAP).contains(&m) {
            return Err(Error::Precondition(format!("value {m} outside [{}, {}]", self.lo, self.hi)));
        }
        let x = (m - self.lo) / self.width();
        let nearest = x.round();
        // Points within rounding distance of a boundary belong to the cell on its right.
        let idx = if (x - nearest).abs() * self.width() < BOUNDARY_SNAP {
            nearest as usize
        } else {
            x.floor().max(0.0) as usize
        };
        Ok(idx.min(self.n_cells - 1))
    }

    /// True when `m` lies strictly inside `J_α` away from any boundary shared with another cell.
    pub fn is_interior(&self, alpha: usize, m: f64) -> bool {
        let (a, b) = self.interval(alpha);
        let lower_ok = if alpha == 0 { m >= a - BOUNDARY_SNAP } else { m > a + BOUNDARY_SNAP };
        let upper_ok = if alpha + 1 == self.n_cells { m <= b + BOUNDARY_SNAP } else { m < b - BOUNDARY_SNAP };
        lower_ok && upper_ok
    }

    pub fn point_cells(&self) -> &[usize] {
        &self.point_cells
    }

    /// Arithmetic mean of the distinct spectrum points in each cell, `None` for empty cells.
    pub fn cell_means(&self) -> &[Option<f64>] {
        &self.cell_means
    }

    pub fn empty_cells(&self) -> Vec<usize> {
        (0..self.n_cells).filter(|&a| self.cell_means[a].is_none()).collect()
    }

    /// Contiguous spectrum-index range of each cell.
    pub fn spectrum_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges = vec![0..0; self.n_cells];
        for (i, &c) in self.point_cells.iter().enumerate() {
            if ranges[c].is_empty() {
                ranges[c] = i..i + 1;
            } else {
                ranges[c].end = i + 1;
            }
        }
        ranges
    }
}

#[derive(Debug, Clone)]
pub struct CoarseGraining {
    pub spec: CellPartitionSpec,
    /// Phase-cell projectors, available when the observable lists its basis values.
    pub partition: Option<PhaseCellPartition>,
    pub warnings: Vec<String>,
}

pub fn coarse_grain(obs: &IntensiveObservable, n_cells: usize) -> Result<CoarseGraining> {
    let (lo, hi) = obs.range();
    let mut spec = CellPartitionSpec::new(lo, hi, n_cells)?;
    let mut sums = vec![(0.0, 0usize); n_cells];
    for &m in obs.spectrum() {
        let c = spec.cell_of(m)?;
        spec.point_cells.push(c);
        sums[c].0 += m;
        sums[c].1 += 1;
    }
    spec.cell_means = sums
        .iter()
        .map(|&(s, k)| if k == 0 { None } else { Some(s / k as f64) })
        .collect();

    let mut warnings = Vec::new();
    if n_cells > obs.spectrum().len() {
        warnings.push(format!(
            "{n_cells} cells exceed the {} spectrum points",
            obs.spectrum().len()
        ));
    }
    let empty = spec.empty_cells();
    if !empty.is_empty() {
        warnings.push(format!("empty cells: {empty:?}"));
    }

    let partition = match obs.basis_values() {
        Some(values) => {
            let mut cells = vec![Vec::new(); n_cells];
            for (i, &m) in values.iter().enumerate() {
                cells[spec.cell_of(m)?].push(i);
            }
            Some(PhaseCellPartition::new(
                values.len(),
                cells.into_iter().map(CellProjector::BasisIndices).collect(),
            )?)
        }
        None => None,
    };
    Ok(CoarseGraining {
        spec,
        partition,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_spin_magnetization_two_cells() {
        let obs = IntensiveObservable::spin_magnetization(4, true).unwrap();
        let cg = coarse_grain(&obs, 2).unwrap();
        assert_eq!(cg.spec.intervals(), vec![(-1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(cg.spec.point_cells(), &[0, 0, 1, 1, 1]);
        let p = cg.partition.unwrap();
        assert_eq!(p.projector(1).rank(), 6 + 4 + 1);
        assert_eq!(cg.spec.cell_means()[1], Some(0.5));
        assert_eq!(cg.spec.spectrum_ranges(), vec![0..2, 2..5]);
        assert!(cg.warnings.is_empty());
    }

    #[test]
    fn single_cell_is_identity() {
        let obs = IntensiveObservable::spin_magnetization(3, true).unwrap();
        let cg = coarse_grain(&obs, 1).unwrap();
        assert_eq!(cg.partition.unwrap().projector(0).rank(), 8);
        assert!(cg.spec.cell_means()[0].unwrap().abs() < 1e-15);
    }

    #[test]
    fn surplus_cells_are_flagged_not_rejected() {
        let obs = IntensiveObservable::spin_magnetization(1, true).unwrap();
        let cg = coarse_grain(&obs, 4).unwrap();
        assert_eq!(cg.spec.empty_cells(), vec![1, 2]);
        assert_eq!(cg.warnings.len(), 2);
    }

    #[test]
    fn boundary_snapping_is_left_closed() {
        let spec = CellPartitionSpec::new(-1.0, 1.0, 3).unwrap();
        let b = -1.0 + 2.0 / 3.0;
        assert_eq!(spec.cell_of(b - 1e-14).unwrap(), 1);
        assert_eq!(spec.cell_of(b - 1e-6).unwrap(), 0);
        assert_eq!(spec.cell_of(1.0).unwrap(), 2);
        assert!(spec.cell_of(1.1).is_err());
        assert!(!spec.is_interior(1, b));
        assert!(spec.is_interior(2, 1.0));
    }

    #[test]
    fn every_basis_state_lands_in_one_cell() {
        for n in 1..=12 {
            let obs = IntensiveObservable::spin_magnetization(n, true).unwrap();
            for cells in 1..=4 {
                let cg = coarse_grain(&obs, cells).unwrap();
                let total: usize = cg.partition.unwrap().projectors().iter().map(|p| p.rank()).sum();
                assert_eq!(total, 1 << n);
            }
        }
    }
}
