//! Builds the spin-chain apparatus, cross-checks the dense and factorized
//! backends and follows the pointer as the particle traverses the chain.

use std::f64::consts::PI;

use pointer_cell_sim::coleman_hepp::{dense_f_tensor, factorized_f_tensor, traversal_schedule, ChainSpec};
use pointer_cell_sim::measurement::{find_pointer_map, ln_max_pointer_error};
use pointer_cell_sim::model::{pointer_weights, Amplitudes};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let small = ChainSpec::new(8, 0.6, 0.8 * PI)?;
    let dense = dense_f_tensor(&small)?;
    let fact = factorized_f_tensor(&small)?;
    let gap = dense.values().iter().zip(fact.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("N = 8, theta = 0.8 pi: dense vs factorized max gap = {gap:.2e}");

    let c = Amplitudes::from_real(&[0.6, 0.8])?;
    let spec = ChainSpec::new(400, 0.6, PI)?;
    println!("{:>9} {:>10} {:>10} {:>14}", "fraction", "w(-)", "w(+)", "ln max eps");
    for step in 0..=10 {
        let fraction = step as f64 / 10.0;
        let f = traversal_schedule(&spec, fraction)?;
        let w = pointer_weights(&f, &c)?;
        let err = match find_pointer_map(&f) {
            Ok(phi) => format!("{:>14.4}", ln_max_pointer_error(&f, &phi)?),
            Err(_) => format!("{:>14}", "no pointer"),
        };
        println!("{fraction:>9.1} {:>10.6} {:>10.6} {err}", w[0], w[1]);
    }
    Ok(())
}
