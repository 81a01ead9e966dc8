use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::logspace::{self, LogValue};

use super::apparatus::PhaseCellPartition;
use super::evolution::EvolvedSectorStates;

/// Pointer statistics `F_{r,s;α} = Tr(Ω_{r,s}(t) Π_α)`.
///
/// Each entry is kept both as a complex value and in log-polar form; the
/// factorized backends fill the log form exactly, so entries far below the
/// `f64` range stay usable for error estimates and decay fits.
#[derive(Debug, Clone, PartialEq)]
pub struct FTensor {
    n: usize,
    t: f64,
    values: Vec<Complex64>,
    logs: Vec<LogValue>,
}

impl FTensor {
    fn index(n: usize, r: usize, s: usize, alpha: usize) -> usize {
        (r * n + s) * n + alpha
    }

    /// Builds from a closure over `(r, s, α)`.
    pub fn from_fn(n: usize, t: f64, f: impl Fn(usize, usize, usize) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(n * n * n);
        for r in 0..n {
            for s in 0..n {
                for a in 0..n {
                    values.push(f(r, s, a));
                }
            }
        }
        let logs = values.iter().map(|&z| LogValue::from_complex(z)).collect();
        FTensor { n, t, values, logs }
    }

    /// Builds from log-polar entries in `(r, s, α)` row-major order.
    pub fn from_logs(n: usize, t: f64, logs: Vec<LogValue>) -> Result<Self> {
        if logs.len() != n * n * n {
            return Err(Error::Structural(format!(
                "expected {} entries for n = {n}, got {}",
                n * n * n,
                logs.len()
            )));
        }
        let values = logs.iter().map(LogValue::to_complex).collect();
        Ok(FTensor { n, t, values, logs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn get(&self, r: usize, s: usize, alpha: usize) -> Complex64 {
        self.values[Self::index(self.n, r, s, alpha)]
    }

    pub fn log_entry(&self, r: usize, s: usize, alpha: usize) -> LogValue {
        self.logs[Self::index(self.n, r, s, alpha)]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Entries that are non-zero but below the `f64` range.
    pub fn underflowed(&self) -> Vec<(usize, usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        for r in 0..n {
            for s in 0..n {
                for a in 0..n {
                    if self.log_entry(r, s, a).underflows() {
                        out.push((r, s, a));
                    }
                }
            }
        }
        out
    }

    /// `Σ_α F_{r,s;α}` in log form.
    pub fn cell_sum(&self, r: usize, s: usize) -> LogValue {
        let terms: Vec<LogValue> = (0..self.n).map(|a| self.log_entry(r, s, a)).collect();
        logspace::sum(&terms).value
    }

    /// Probability mass of sector `r` outside cell `alpha`, `Σ_{β≠α} F_{r,r;β}`.
    ///
    /// Equals `1 - F_{r,r;α}` by normalization but does not cancel when
    /// `F_{r,r;α}` is within rounding of one.
    pub fn mass_outside(&self, r: usize, alpha: usize) -> LogValue {
        let terms: Vec<LogValue> = (0..self.n)
            .filter(|&b| b != alpha)
            .map(|b| {
                let l = self.log_entry(r, r, b);
                // Diagonal entries are probabilities; drop roundoff phases.
                LogValue::from_ln(l.ln_abs)
            })
            .collect();
        logspace::sum(&terms).value
    }

    /// Relabels cells: the new cell `α` is old cell `perm[α]`.
    pub fn permute_cells(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut logs = Vec::with_capacity(n * n * n);
        let mut values = Vec::with_capacity(n * n * n);
        for r in 0..n {
            for s in 0..n {
                for &old in perm {
                    logs.push(self.log_entry(r, s, old));
                    values.push(self.get(r, s, old));
                }
            }
        }
        FTensor {
            n,
            t: self.t,
            values,
            logs,
        }
    }
}

/// `F_{r,s;α} = Tr(Ω_{r,s}(t) Π_α)`.
pub fn f_tensor(states: &EvolvedSectorStates, cells: &PhaseCellPartition) -> Result<FTensor> {
    let n = states.sector_count();
    if cells.dim() != states.apparatus_dim() {
        return Err(Error::Structural(format!(
            "cell partition acts on dimension {} but states have dimension {}",
            cells.dim(),
            states.apparatus_dim()
        )));
    }
    if cells.cell_count() != n {
        return Err(Error::Structural(format!(
            "{} cells for {n} sectors",
            cells.cell_count()
        )));
    }
    Ok(FTensor::from_fn(n, states.t(), |r, s, a| {
        cells.projector(a).trace_against(states.get(r, s))
    }))
}

/// `F_{r,s;α} = δ_{r,φ(α)} δ_{s,φ(α)}`: the ideal pointer tensor for the map `φ`.
pub fn ideal_tensor(phi: &[usize], t: f64) -> FTensor {
    let n = phi.len();
    FTensor::from_fn(n, t, |r, s, a| {
        if r == phi[a] && s == phi[a] {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_outside_avoids_cancellation() {
        let tiny = 1e-30;
        let f = FTensor::from_fn(2, 0.0, |r, s, a| {
            if r != s {
                Complex64::new(0.0, 0.0)
            } else if a == r {
                Complex64::new(1.0 - tiny, 0.0)
            } else {
                Complex64::new(tiny, 0.0)
            }
        });
        let m = f.mass_outside(0, 0);
        assert!((m.to_complex().re - tiny).abs() < 1e-44);
    }

    #[test]
    fn ideal_tensor_structure() {
        let f = ideal_tensor(&[1, 0], 0.0);
        assert_eq!(f.get(1, 1, 0), Complex64::new(1.0, 0.0));
        assert_eq!(f.get(0, 0, 1), Complex64::new(1.0, 0.0));
        assert_eq!(f.get(0, 0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(f.get(0, 1, 0), Complex64::new(0.0, 0.0));
    }
}
