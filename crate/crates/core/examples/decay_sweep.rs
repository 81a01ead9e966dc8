//! Fits the exponential decay of the pointer error of a polarized chain and
//! compares it with the large-deviation gap at the cell boundary.

use std::f64::consts::PI;

use pointer_cell_sim::coleman_hepp::{factorized_f_tensor, ChainSpec};
use pointer_cell_sim::logspace::bernoulli_relative_entropy;
use pointer_cell_sim::measurement::{find_pointer_map, fit_decay_rate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = ChainSpec::new(1, 0.6, PI)?;
    let ns = [50, 100, 200, 400, 800];
    let tensors = ns
        .iter()
        .map(|&n| factorized_f_tensor(&base.with_n(n)))
        .collect::<Result<Vec<_>, _>>()?;
    let maps = tensors.iter().map(find_pointer_map).collect::<Result<Vec<_>, _>>()?;
    let sweep: Vec<_> = ns.iter().zip(&tensors).zip(&maps).map(|((&n, f), p)| (n, f, p)).collect();
    let fit = fit_decay_rate(&sweep)?;

    println!("{:>6} {:>14}", "N", "ln max eps");
    for (n, l) in &fit.sweep {
        println!("{n:>6} {l:>14.6}");
    }
    let gap = bernoulli_relative_entropy(0.5, 0.8);
    println!("fitted c       = {:.6}", fit.decay_constant());
    println!("r^2            = {:.6}", fit.r_squared);
    println!("certified c    = {:.6}", fit.certified_constant());
    println!("D(1/2 || 0.8)  = {gap:.6}");
    println!("relative error = {:.4}", (fit.decay_constant() - gap).abs() / gap);
    Ok(())
}
