use crate::coarse::{coarse_grain, IntensiveObservable};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{evolve_sectors, f_tensor, Apparatus, FTensor, MicroSystem, DENSE_CAP};

use super::chain::ChainSpec;

/// Longest chain the dense backend accepts.
pub const MAX_DENSE_SITES: usize = 12;

fn site_matrix(spec: &ChainSpec, k: usize) -> CMat {
    let x = spec.site_state(k).0;
    CMat::from_fn(2, 2, |i, j| x[i][j])
}

/// `θ/(2t) Σ_{k < passed} σ_x^{(k)}`, so that `exp(i t V) = ⊗_k exp(iθσ_x/2)` on the passed sites.
fn rotation_generator(spec: &ChainSpec, passed: usize) -> CMat {
    let dim = 1usize << spec.n;
    let g = 0.5 * spec.theta / spec.t;
    let mut v = linalg::zeros(dim);
    for b in 0..dim {
        for k in 0..passed {
            v[(b ^ (1 << (spec.n - 1 - k)), b)].re += g;
        }
    }
    v
}

pub(crate) fn build_dense_partial(spec: &ChainSpec, passed: usize) -> Result<(MicroSystem, Apparatus)> {
    spec.validate()?;
    if spec.n > MAX_DENSE_SITES || 2 << spec.n > DENSE_CAP {
        return Err(Error::Capacity(format!(
            "a chain of {} sites exceeds the dense backend (at most {MAX_DENSE_SITES}); use the factorized backend",
            spec.n
        )));
    }
    let system = MicroSystem::new(vec![spec.energies.0, spec.energies.1], vec!["+".into(), "-".into()])?;
    let dim = 1usize << spec.n;
    let mut omega = linalg::identity(1);
    for k in 0..spec.n {
        omega = linalg::kron(omega.as_ref(), site_matrix(spec, k).as_ref());
    }
    let obs = IntensiveObservable::spin_magnetization(spec.n, true)?;
    let cells = coarse_grain(&obs, 2)?
        .partition
        .expect("magnetization lists its basis values");
    let apparatus = Apparatus::new(
        linalg::zeros(dim),
        vec![linalg::zeros(dim), rotation_generator(spec, passed.min(spec.n))],
        omega,
        cells,
    )?;
    Ok((system, apparatus))
}

/// Explicit `2^N`-dimensional model of the chain after full traversal.
pub fn build_dense(spec: &ChainSpec) -> Result<(MicroSystem, Apparatus)> {
    build_dense_partial(spec, spec.n)
}

/// `F` through dense sector evolution.
pub fn dense_f_tensor(spec: &ChainSpec) -> Result<FTensor> {
    let (system, apparatus) = build_dense(spec)?;
    f_tensor(&evolve_sectors(&system, &apparatus, spec.t)?, apparatus.cells())
}

/// Dense counterpart of the traversal schedule: the first `⌊fraction · N⌋` sites rotated, read at time `fraction · t`.
pub fn dense_traversal_f_tensor(spec: &ChainSpec, fraction: f64) -> Result<FTensor> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Precondition(format!(
            "dense traversal needs a fraction in (0, 1], got {fraction}"
        )));
    }
    let passed = (fraction * spec.n as f64).floor() as usize;
    let early = ChainSpec {
        t: fraction * spec.t,
        ..spec.clone()
    };
    let (system, apparatus) = build_dense_partial(&early, passed)?;
    f_tensor(&evolve_sectors(&system, &apparatus, early.t)?, apparatus.cells())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coleman_hepp::chain::Mat2;
    use crate::coleman_hepp::factorized::factorized_f_tensor;
    use std::f64::consts::PI;

    fn max_diff(a: &FTensor, b: &FTensor) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn partial_traversal_matches_factorized() {
        let mut spec = ChainSpec::new(6, 0.4, 2.0).unwrap();
        spec.energies = (0.3, -0.7);
        spec.t = 1.5;
        for f in [0.25, 0.5, 1.0] {
            let d = dense_traversal_f_tensor(&spec, f).unwrap();
            let p = crate::coleman_hepp::factorized::traversal_schedule(&spec, f).unwrap();
            assert!(max_diff(&d, &p) < 1e-12, "fraction {f}");
        }
    }

    #[test]
    fn single_site_flip() {
        let f = dense_f_tensor(&ChainSpec::new(1, 1.0, PI).unwrap()).unwrap();
        assert!((f.get(0, 0, 1).re - 1.0).abs() < 1e-12);
        assert!((f.get(1, 1, 0).re - 1.0).abs() < 1e-12);
        let f = dense_f_tensor(&ChainSpec::new(2, 1.0, PI).unwrap()).unwrap();
        assert!((f.get(1, 1, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_factorized_backend() {
        let mut spec = ChainSpec::new(4, 0.6, PI).unwrap();
        assert!(max_diff(&dense_f_tensor(&spec).unwrap(), &factorized_f_tensor(&spec).unwrap()) < 1e-10);
        spec.theta = 1.3;
        spec.energies = (0.25, -0.5);
        spec.t = 0.7;
        spec.site_overrides.insert(2, Mat2::polarized(-0.3));
        assert!(max_diff(&dense_f_tensor(&spec).unwrap(), &factorized_f_tensor(&spec).unwrap()) < 1e-10);
    }

    #[test]
    fn rejects_long_chains() {
        let spec = ChainSpec::new(13, 0.6, PI).unwrap();
        assert!(matches!(build_dense(&spec), Err(Error::Capacity(_))));
    }
}
