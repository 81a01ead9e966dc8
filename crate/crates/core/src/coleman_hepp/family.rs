use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measurement::PerturbedFamily;
use crate::model::FTensor;

use super::chain::{ChainSpec, Mat2};
use super::factorized::{factorized_f_tensor, traversal_schedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationKind {
    /// Swap the up and down populations of the site.
    Flip,
    /// Replace the site by the maximally mixed state.
    Depolarize,
    /// Replace the site by `(I + m σ_z)/2`.
    Polarization(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SiteSelection {
    /// The first `k` sites, whatever the chain length.
    First(usize),
    /// The first `⌊f N⌋` sites.
    Fraction(f64),
    Explicit(Vec<usize>),
}

/// A local edit of the chain's initial state, defined for every chain length.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRule {
    pub kind: PerturbationKind,
    pub sites: SiteSelection,
}

impl PerturbationRule {
    pub fn sites_for(&self, n: usize) -> Vec<usize> {
        match &self.sites {
            SiteSelection::First(k) => (0..(*k).min(n)).collect(),
            SiteSelection::Fraction(f) => (0..((f * n as f64).floor() as usize).min(n)).collect(),
            SiteSelection::Explicit(v) => v.iter().copied().filter(|&k| k < n).collect(),
        }
    }

    /// Applies the edit on top of the spec's own site states.
    pub fn apply(&self, spec: &ChainSpec) -> Result<ChainSpec> {
        let mut out = spec.clone();
        for k in self.sites_for(spec.n) {
            let current = spec.site_state(k);
            let edited = match self.kind {
                PerturbationKind::Flip => current.flipped(),
                PerturbationKind::Depolarize => Mat2::polarized(0.0),
                PerturbationKind::Polarization(m) => {
                    if !(-1.0..=1.0).contains(&m) {
                        return Err(Error::Precondition(format!("site polarization {m} is not in [-1, 1]")));
                    }
                    Mat2::polarized(m)
                }
            };
            out.site_overrides.insert(k, edited);
        }
        out.validate()?;
        Ok(out)
    }
}

/// Chains of varying length sharing one spec template.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFamily {
    pub template: ChainSpec,
    pub perturbation: Option<PerturbationRule>,
    /// Traversal fraction at which the pointer is read; 1 means after full traversal.
    pub fraction: f64,
}

impl ChainFamily {
    pub fn new(template: ChainSpec) -> Self {
        ChainFamily {
            template,
            perturbation: None,
            fraction: 1.0,
        }
    }

    pub fn spec(&self, n: usize, perturbed: bool) -> Result<ChainSpec> {
        // Template overrides are meaningful only for sites that exist at this length.
        let mut spec = self.template.with_n(n);
        spec.site_overrides = self
            .template
            .site_overrides
            .iter()
            .filter(|(&k, _)| k < n)
            .map(|(&k, &x)| (k, x))
            .collect::<BTreeMap<_, _>>();
        match (&self.perturbation, perturbed) {
            (Some(rule), true) => rule.apply(&spec),
            _ => Ok(spec),
        }
    }
}

impl PerturbedFamily for ChainFamily {
    fn tensor(&self, n: usize, perturbed: bool) -> Result<FTensor> {
        let spec = self.spec(n, perturbed)?;
        if self.fraction == 1.0 {
            factorized_f_tensor(&spec)
        } else {
            traversal_schedule(&spec, self.fraction)
        }
    }

    fn perturbation_support(&self, n: usize) -> usize {
        self.perturbation.as_ref().map_or(0, |p| p.sites_for(n).len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn site_selection() {
        let rule = PerturbationRule {
            kind: PerturbationKind::Flip,
            sites: SiteSelection::Fraction(0.5),
        };
        assert_eq!(rule.sites_for(7), vec![0, 1, 2]);
        let rule = PerturbationRule {
            kind: PerturbationKind::Flip,
            sites: SiteSelection::Explicit(vec![1, 9]),
        };
        assert_eq!(rule.sites_for(5), vec![1]);
    }

    #[test]
    fn flip_edits_the_initial_state() {
        let spec = ChainSpec::new(5, 0.6, PI).unwrap();
        let rule = PerturbationRule {
            kind: PerturbationKind::Flip,
            sites: SiteSelection::First(2),
        };
        let out = rule.apply(&spec).unwrap();
        assert_eq!(out.site_state(1), Mat2::polarized(-0.6));
        assert_eq!(out.site_state(2), Mat2::polarized(0.6));
    }

    #[test]
    fn unperturbed_family_support_is_zero() {
        let fam = ChainFamily::new(ChainSpec::new(5, 0.6, PI).unwrap());
        assert_eq!(fam.perturbation_support(100), 0);
        assert_eq!(fam.tensor(9, true).unwrap(), fam.tensor(9, false).unwrap());
    }
}
