//! Checks that the pointer error keeps its exponential decay when a few chain
//! spins are edited, and that edits of half the chain are rejected.

use std::f64::consts::PI;

use pointer_cell_sim::coleman_hepp::{ChainFamily, ChainSpec, PerturbationKind, PerturbationRule, SiteSelection};
use pointer_cell_sim::measurement::{stability_test, StabilityOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ns = [50, 100, 200, 300, 400, 500];
    let template = ChainSpec::new(1, 0.6, PI)?;
    let cases = [
        ("flip 2", PerturbationKind::Flip, SiteSelection::First(2)),
        ("depolarize 2", PerturbationKind::Depolarize, SiteSelection::First(2)),
        ("depolarize N/2", PerturbationKind::Depolarize, SiteSelection::Fraction(0.5)),
    ];
    for (name, kind, sites) in cases {
        let family = ChainFamily {
            perturbation: Some(PerturbationRule { kind, sites }),
            ..ChainFamily::new(template.clone())
        };
        match stability_test(&family, &ns, StabilityOptions::default()) {
            Ok(rep) => {
                println!(
                    "{name:>15}: baseline c = {:.5}, perturbed c = {:.5}, shift = {:.3}, bound holds = {}, passed = {}",
                    rep.baseline.decay_constant(),
                    rep.perturbed.as_ref().map_or(f64::NAN, |p| p.decay_constant()),
                    rep.relative_shift.unwrap_or(f64::NAN),
                    rep.bound_holds,
                    rep.passed
                );
                for p in &rep.points {
                    println!("{:>20} N = {:>4}: ln eps {:>10.4} -> {:>10.4}", "", p.n, p.ln_error_baseline, p.ln_error_perturbed);
                }
            }
            Err(e) => println!("{name:>15}: rejected: {e}"),
        }
        let forced = StabilityOptions {
            force_nonlocal: true,
            ..StabilityOptions::default()
        };
        if let SiteSelection::Fraction(_) = family.perturbation.as_ref().unwrap().sites {
            let rep = stability_test(&family, &ns, forced)?;
            println!("{:>15}  forced: passed = {}, notes = {:?}", "", rep.passed, rep.notes);
        }
    }
    Ok(())
}
