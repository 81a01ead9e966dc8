//! Estimates the magnetization rate function of a Bernoulli spin chain and
//! compares it with the relative-entropy closed form.

use pointer_cell_sim::coarse::{check_ldp_conditions, estimate_rate, CellPartitionSpec, ProductFamily};
use pointer_cell_sim::measurement::PointerMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid: Vec<f64> = (-4..=4).map(|k| k as f64 / 5.0).collect();
    let ns = [100, 200, 400, 800, 1600];
    let plus = estimate_rate(&ProductFamily::bernoulli(0.8), &ns, &grid)?;
    let minus = estimate_rate(&ProductFamily::bernoulli(0.2), &ns, &grid)?;

    print!("{:>6} {:>10}", "m", "sigma(m)");
    for n in ns {
        print!(" {:>10}", format!("N={n}"));
    }
    println!(" {:>10}", "N->inf");
    for (i, &m) in grid.iter().enumerate() {
        print!("{m:>6.2} {:>10.5}", plus.sample(i, 0).analytic);
        for j in 0..ns.len() {
            match plus.sample(i, j).empirical {
                Some(e) => print!(" {e:>10.5}"),
                None => print!(" {:>10}", "-"),
            }
        }
        match plus.extrapolated[i] {
            Some(x) => println!(" {x:>10.5}"),
            None => println!(" {:>10}", "-"),
        }
    }

    let cells = CellPartitionSpec::new(-1.0, 1.0, 2)?;
    let phi = PointerMap::from_phi(vec![1, 0])?;
    let report = check_ldp_conditions(&[plus, minus], &cells, &phi, None)?;
    println!("maximizers = {:?}", report.maximizers);
    println!("gap constant = {:?}", report.gap_constant);
    println!("conditions hold = {}", report.passed());
    Ok(())
}
