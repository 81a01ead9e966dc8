use crate::error::{Error, Result};
use crate::logspace;

/// Intensive observable `m = M_f / N` with pure point spectrum inside `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensiveObservable {
    n_particles: usize,
    lo: f64,
    hi: f64,
    spectrum: Vec<f64>,
    ln_multiplicity: Vec<f64>,
    /// Eigenvalue of each basis vector when the observable is diagonal in a known basis.
    basis_values: Option<Vec<f64>>,
}

impl IntensiveObservable {
    /// Spectrum points with their (positive) multiplicities, given in any order.
    pub fn new(
        n_particles: usize,
        lo: f64,
        hi: f64,
        points: &[(f64, f64)],
        basis_values: Option<Vec<f64>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Precondition("spectrum is empty".into()));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Precondition(format!("invalid range [{lo}, {hi}]")));
        }
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pts.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Structural(format!("spectrum point {} listed twice", w[0].0)));
            }
        }
        for &(m, mult) in &pts {
            if !(lo - 1e-12..=hi + 1e-12).contains(&m) {
                return Err(Error::Structural(format!("spectrum point {m} outside [{lo}, {hi}]")));
            }
            if !(mult > 0.0) {
                return Err(Error::Structural(format!("multiplicity of {m} is not positive")));
            }
        }
        Ok(IntensiveObservable {
            n_particles,
            lo,
            hi,
            spectrum: pts.iter().map(|p| p.0).collect(),
            ln_multiplicity: pts.iter().map(|p| p.1.ln()).collect(),
            basis_values,
        })
    }

    /// Diagonal observable given by its value on each basis vector.
    pub fn from_basis_values(n_particles: usize, lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let mut points: Vec<(f64, f64)> = Vec::new();
        for v in sorted {
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 += 1.0,
                _ => points.push((v, 1.0)),
            }
        }
        Self::new(n_particles, lo, hi, &points, Some(values))
    }

    /// Magnetization per spin of `N` two-level sites, spectrum `(2j - N)/N`.
    ///
    /// With `with_basis`, basis index `b` carries site `k` in bit `N-1-k`, and a
    /// zero bit is spin up.
    pub fn spin_magnetization(n: usize, with_basis: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("magnetization needs at least one spin".into()));
        }
        let ln_binom = logspace::ln_binomial_row(n);
        let nf = n as f64;
        let spectrum: Vec<f64> = (0..=n).map(|j| (2.0 * j as f64 - nf) / nf).collect();
        let basis_values = if with_basis {
            if n > 24 {
                return Err(Error::Capacity(format!("basis of 2^{n} states is too large to list")));
            }
            Some(
                (0..1usize << n)
                    .map(|b| {
                        let up = n - b.count_ones() as usize;
                        (2.0 * up as f64 - nf) / nf
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(IntensiveObservable {
            n_particles: n,
            lo: -1.0,
            hi: 1.0,
            spectrum,
            ln_multiplicity: ln_binom,
            basis_values,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn ln_multiplicity(&self) -> &[f64] {
        &self.ln_multiplicity
    }

    pub fn basis_values(&self) -> Option<&[f64]> {
        self.basis_values.as_deref()
    }

    /// Largest distance between neighbouring spectrum points.
    pub fn max_gap(&self) -> f64 {
        self.spectrum.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Half the distance to the nearest other spectrum point around `m`.
    pub fn local_half_gap(&self, m: f64) -> f64 {
        let i = self.spectrum.partition_point(|&x| x < m);
        let mut gap = f64::INFINITY;
        if i > 0 && i < self.spectrum.len() {
            gap = self.spectrum[i] - self.spectrum[i - 1];
        }
        // Use the neighbours of the closest point when m sits on the spectrum.
        for k in [i.saturating_sub(1), i] {
            if k + 1 < self.spectrum.len() {
                gap = gap.min(self.spectrum[k + 1] - self.spectrum[k]);
            }
        }
        if gap.is_finite() {
            0.5 * gap
        } else {
            0.5 * (self.hi - self.lo)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnetization_basis_counts() {
        let obs = IntensiveObservable::spin_magnetization(4, true).unwrap();
        assert_eq!(obs.spectrum(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        let basis = obs.basis_values().unwrap();
        assert_eq!(basis[0], 1.0);
        assert_eq!(basis[15], -1.0);
        let zeros = basis.iter().filter(|&&m| m == 0.0).count();
        assert_eq!(zeros, 6);
        assert!((obs.ln_multiplicity()[2] - 6f64.ln()).abs() < 1e-12);
        assert_eq!(obs.max_gap(), 0.5);
    }

    #[test]
    fn basis_values_group_into_spectrum() {
        let obs = IntensiveObservable::from_basis_values(1, 0.0, 1.0, vec![0.5, 0.0, 0.5, 1.0]).unwrap();
        assert_eq!(obs.spectrum(), &[0.0, 0.5, 1.0]);
        assert!((obs.ln_multiplicity()[1] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_points_outside_range() {
        assert!(IntensiveObservable::new(1, 0.0, 1.0, &[(1.5, 1.0)], None).is_err());
        assert!(IntensiveObservable::new(1, 0.0, 1.0, &[], None).is_err());
    }

    #[test]
    fn gap_shrinks_like_one_over_n() {
        for n in [10, 100, 1000] {
            let obs = IntensiveObservable::spin_magnetization(n, false).unwrap();
            assert!((obs.max_gap() * n as f64 - 2.0).abs() < 1e-9);
            assert!((obs.local_half_gap(0.3) - 1.0 / n as f64).abs() < 1e-9);
        }
    }
}
