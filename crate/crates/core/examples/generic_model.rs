//! Evolves a random three-sector apparatus, prints its F tensor properties and
//! checks the functionals against the full composite density matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pointer_cell_sim::model::random::random_instance;
use pointer_cell_sim::model::{
    check_f_properties, conditional_expectation, evolve_sectors, expectation_s, f_tensor, pointer_weights,
    CompositeState,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let inst = random_instance(&mut rng, 3, 8)?;
    let (sys, app, c, a) = (&inst.system, &inst.apparatus, &inst.amplitudes, &inst.observable);
    let f = f_tensor(&evolve_sectors(sys, app, inst.t)?, app.cells())?;

    let props = check_f_properties(&f)?;
    println!("t = {:.4}, max property violation = {:.2e}", inst.t, props.max_violation());

    let comp = CompositeState::evolve(sys, app, c, inst.t)?;
    let w = pointer_weights(&f, c)?;
    println!("{:>5} {:>12} {:>12} {:>12}", "cell", "w", "w (dense)", "E(A|K)");
    for alpha in 0..f.n() {
        let cond = conditional_expectation(&f, c, a, alpha)?;
        println!("{alpha:>5} {:>12.8} {:>12.8} {cond:>12.8}", w[alpha], comp.weight(app, alpha).re);
    }
    println!("E(A)        = {:.10}", expectation_s(&f, c, a)?);
    println!("E(A) dense  = {:.10}", comp.expectation_s(a).re);
    Ok(())
}
