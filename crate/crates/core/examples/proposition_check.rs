//! Shows that ideal pointer tensors reproduce the mixture of sector
//! expectations, and how the residuals grow with a controlled pointer leak.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pointer_cell_sim::measurement::{check_exact_condition, ln_von_neumann_residuals, PointerMap};
use pointer_cell_sim::model::random::{random_amplitudes, random_hermitian, random_pointer_tensor};
use pointer_cell_sim::model::{expectation_s, ObservableS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let phi = vec![2, 0, 1];
    let map = PointerMap::from_phi(phi.clone())?;
    let c = random_amplitudes(&mut rng, 3);
    let a = ObservableS::new(random_hermitian(&mut rng, 3, 1.0))?;
    let mixture: f64 = (0..3).map(|r| c[r].norm_sqr() * a.element(r, r).re).sum();

    println!("{:>8} {:>7} {:>12} {:>12} {:>12} {:>10}", "delta", "exact", "coherence", "ideal dev", "|E - mix|", "3 sqrt d");
    for delta in [0.0, 1e-4, 1e-3, 1e-2, 1e-1] {
        let f = random_pointer_tensor(&mut rng, &phi, delta);
        let exact = check_exact_condition(&f, &map)?;
        let (coh, dev) = ln_von_neumann_residuals(&f, &map)?;
        let gap = (expectation_s(&f, &c, &a)? - mixture).abs();
        println!(
            "{delta:>8.0e} {:>7} {:>12.3e} {:>12.3e} {gap:>12.3e} {:>10.3e}",
            exact.holds,
            coh.exp(),
            dev.exp(),
            3.0 * delta.sqrt()
        );
    }
    Ok(())
}
