//! Seeded random instances for property checks and benchmarks.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{self, CMat};

use super::apparatus::{Apparatus, CellProjector, PhaseCellPartition};
use super::ftensor::FTensor;
use super::system::{Amplitudes, MicroSystem, ObservableS};

fn gaussian_pair(rng: &mut ChaCha8Rng) -> Complex64 {
    // Box-Muller; the entries only need to be generic, not exactly Gaussian.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = std::f64::consts::TAU * u2;
    Complex64::new(r * th.cos(), r * th.sin())
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian_pair(rng))
}

/// Hermitian matrix with entries of order `scale`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> CMat {
    let g = random_complex_matrix(rng, dim, dim);
    CMat::from_fn(dim, dim, |i, j| (g[(i, j)] + g[(j, i)].conj()) * (0.5 * scale))
}

/// Full-rank density matrix `G G^† / Tr(G G^†)`.
pub fn random_density_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMat {
    let g = random_complex_matrix(rng, dim, dim);
    let gg = &g * g.adjoint();
    let tr = linalg::trace(gg.as_ref()).re;
    let mut rho = CMat::from_fn(dim, dim, |i, j| gg[(i, j)] / tr);
    // Remove the rounding asymmetry of the product.
    for i in 0..dim {
        rho[(i, i)] = Complex64::new(rho[(i, i)].re, 0.0);
        for j in 0..i {
            let avg = (rho[(i, j)] + rho[(j, i)].conj()) * 0.5;
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
    rho
}

pub fn random_amplitudes(rng: &mut ChaCha8Rng, n: usize) -> Amplitudes {
    let v: Vec<Complex64> = (0..n).map(|_| gaussian_pair(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Amplitudes::new(v.into_iter().map(|z| z / norm).collect()).expect("normalized by construction")
}

/// Splits `0..dim` into `n` non-empty basis-index cells.
pub fn random_cells(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Result<PhaseCellPartition> {
    assert!(n <= dim, "cannot split {dim} basis vectors into {n} non-empty cells");
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(rng);
    let mut assignment: Vec<usize> = (0..dim).map(|i| if i < n { i } else { rng.random_range(0..n) }).collect();
    assignment.shuffle(rng);
    let mut cells = vec![Vec::new(); n];
    for (k, &i) in idx.iter().enumerate() {
        cells[assignment[k]].push(i);
    }
    for c in &mut cells {
        c.sort_unstable();
    }
    PhaseCellPartition::new(dim, cells.into_iter().map(CellProjector::BasisIndices).collect())
}

/// A random microsystem, apparatus and state of the requested sizes.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub system: MicroSystem,
    pub apparatus: Apparatus,
    pub amplitudes: Amplitudes,
    pub observable: ObservableS,
    pub t: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, dim_k: usize) -> Result<RandomInstance> {
    let energies: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let system = MicroSystem::with_energies(energies)?;
    let k = random_hermitian(rng, dim_k, 1.0);
    let couplings = (0..n).map(|_| random_hermitian(rng, dim_k, 1.0)).collect();
    let omega = random_density_matrix(rng, dim_k);
    let cells = random_cells(rng, dim_k, n)?;
    let apparatus = Apparatus::new(k, couplings, omega, cells)?;
    let amplitudes = random_amplitudes(rng, n);
    let observable = ObservableS::new(random_hermitian(rng, n, 1.0))?;
    let t = rng.random_range(0.1..3.0);
    Ok(RandomInstance {
        system,
        apparatus,
        amplitudes,
        observable,
        t,
    })
}

/// Basis vectors per cell in [`random_pointer_tensor`].
const POINTER_CELL_RANK: usize = 2;

/// `F` of a pure apparatus state whose sector-`r` component leaves its pointer cell
/// `φ^{-1}(r)` with probability `δ_r ≤ delta`; sector 0 has `δ_0 = delta` exactly.
/// `phi[α]` is the sector read from cell `α`.
pub fn random_pointer_tensor(rng: &mut ChaCha8Rng, phi: &[usize], delta: f64) -> FTensor {
    assert!((0.0..=1.0).contains(&delta), "leak probability {delta} is not in [0, 1]");
    let n = phi.len();
    let mut home = vec![usize::MAX; n];
    for (alpha, &r) in phi.iter().enumerate() {
        home[r] = alpha;
    }
    assert!(home.iter().all(|&a| a < n), "phi is not a permutation");
    let dim = n * POINTER_CELL_RANK;
    let unit = |rng: &mut ChaCha8Rng, len: usize| -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..len).map(|_| gaussian_pair(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect()
    };
    let psi: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            let leak = if r == 0 { delta } else { delta * rng.random::<f64>() };
            let inside = unit(rng, POINTER_CELL_RANK);
            let outside = unit(rng, dim - POINTER_CELL_RANK);
            let mut v = Vec::with_capacity(dim);
            let mut out = outside.into_iter();
            for alpha in 0..n {
                for k in 0..POINTER_CELL_RANK {
                    v.push(if alpha == home[r] {
                        inside[k] * (1.0 - leak).sqrt()
                    } else {
                        out.next().expect("sized to the complement") * leak.sqrt()
                    });
                }
            }
            v
        })
        .collect();
    FTensor::from_fn(n, 0.0, |r, s, alpha| {
        (alpha * POINTER_CELL_RANK..(alpha + 1) * POINTER_CELL_RANK)
            .map(|i| psi[r][i] * psi[s][i].conj())
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::apparatus::check_density_matrix;
    use rand::SeedableRng;

    #[test]
    fn generated_objects_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rho = random_density_matrix(&mut rng, 6);
            check_density_matrix(rho.as_ref(), 1e-12).unwrap();
            let cells = random_cells(&mut rng, 6, 4).unwrap();
            assert!(cells.projectors().iter().all(|p| p.rank() > 0));
        }
    }

    #[test]
    fn seeded_instances_repeat() {
        let a = random_instance(&mut ChaCha8Rng::seed_from_u64(3), 3, 8).unwrap();
        let b = random_instance(&mut ChaCha8Rng::seed_from_u64(3), 3, 8).unwrap();
        assert_eq!(a.amplitudes, b.amplitudes);
        assert_eq!(a.t, b.t);
    }

    #[test]
    fn pointer_tensor_has_the_requested_leak() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = [2, 0, 1];
        let f = random_pointer_tensor(&mut rng, &phi, 0.05);
        assert!(crate::model::check_f_properties(&f).unwrap().passed());
        assert!((1.0 - f.get(0, 0, 1).re - 0.05).abs() < 1e-12);
        for r in 1..3 {
            let home = phi.iter().position(|&x| x == r).unwrap();
            assert!(1.0 - f.get(r, r, home).re <= 0.05 + 1e-12);
        }
    }
}
