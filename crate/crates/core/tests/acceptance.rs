//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use faer::Side;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pointer_cell_sim::coarse::{estimate_rate, ProductFamily};
use pointer_cell_sim::coleman_hepp::{
    dense_f_tensor, factorized_f_tensor, ChainFamily, ChainSpec, PerturbationKind, PerturbationRule, SiteSelection,
};
use pointer_cell_sim::linalg::CMat;
use pointer_cell_sim::measurement::{
    check_exact_condition, find_pointer_map, fit_decay_points, ln_max_pointer_error, ln_von_neumann_residuals,
    stability_test, PerturbedFamily, PointerMap, StabilityOptions,
};
use pointer_cell_sim::model::random::{random_amplitudes, random_hermitian, random_instance, random_pointer_tensor};
use pointer_cell_sim::model::{
    check_f_properties, conditional_expectation, evolve_sectors, expectation_s, f_tensor, ideal_tensor, pointer_weights,
    CompositeState, FTensor, ObservableS,
};

use common::{
    cli, dir_contents, ln_binomial_mass, ln_chain_pointer_error, relative_entropy, CHAIN_FIXTURE, SUBCOMMANDS,
};

type Check = Result<String, String>;
/// Name, time budget in seconds and the check itself.
type Criterion = (&'static str, u64, fn() -> Check);

const DECAY_SWEEP: [usize; 5] = [50, 100, 200, 400, 800];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Maximal violations of the tensor identities, computed entry by entry.
fn property_violation(f: &FTensor) -> Result<f64, String> {
    let n = f.n();
    let mut worst = 0.0_f64;
    for r in 0..n {
        let total: Complex64 = (0..n).map(|a| f.get(r, r, a)).sum();
        worst = worst.max((total - 1.0).norm());
        for a in 0..n {
            let d = f.get(r, r, a);
            worst = worst.max(d.im.abs()).max((-d.re).max(0.0)).max((d.re - 1.0).max(0.0));
            for s in 0..n {
                worst = worst.max((f.get(r, s, a) - f.get(s, r, a).conj()).norm());
                let cs = f.get(r, s, a).norm_sqr() - f.get(r, r, a).re * f.get(s, s, a).re;
                worst = worst.max(cs.max(0.0));
            }
        }
    }
    for a in 0..n {
        let g = CMat::from_fn(n, n, |r, s| f.get(r, s, a));
        let ev = g.self_adjoint_eigenvalues(Side::Lower).map_err(|e| format!("{e:?}"))?;
        worst = worst.max(ev.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max));
    }
    Ok(worst)
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for i in 0..200 {
        let n = [2, 3, 4][i % 3];
        let dim = [4, 8, 16][(i / 3) % 3];
        let inst = random_instance(&mut rng, n, dim).map_err(err)?;
        let states = evolve_sectors(&inst.system, &inst.apparatus, inst.t).map_err(err)?;
        let f = f_tensor(&states, inst.apparatus.cells()).map_err(err)?;
        let v = property_violation(&f)?;
        let report = check_f_properties(&f).map_err(err)?;
        ensure(report.passed(), || format!("instance {i}: library check rejects {report:?}"))?;
        worst = worst.max(v).max(report.max_violation());
    }
    ensure(worst < 1e-9, || format!("max violation {worst:e}"))?;
    Ok(format!("200 instances, max violation {worst:.2e}"))
}

fn random_phi(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut phi: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        phi.swap(i, rng.random_range(0..=i));
    }
    phi
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ideal = 0.0_f64;
    for i in 0..100 {
        let n = 2 + i % 3;
        let phi = random_phi(&mut rng, n);
        let f = ideal_tensor(&phi, 1.0);
        let map = PointerMap::from_phi(phi.clone()).map_err(err)?;
        let exact = check_exact_condition(&f, &map).map_err(err)?;
        ensure(exact.holds && exact.ideal_deviation <= 1e-9, || format!("ideal tensor {i}: {exact:?}"))?;
        for _ in 0..100 {
            let c = random_amplitudes(&mut rng, n);
            let a = ObservableS::new(random_hermitian(&mut rng, n, 1.0)).map_err(err)?;
            let mixture: f64 = (0..n).map(|r| c[r].norm_sqr() * a.element(r, r).re).sum();
            worst_ideal = worst_ideal.max((expectation_s(&f, &c, &a).map_err(err)? - mixture).abs());
            let w = pointer_weights(&f, &c).map_err(err)?;
            for (alpha, &r) in phi.iter().enumerate() {
                worst_ideal = worst_ideal.max((w[alpha] - c[r].norm_sqr()).abs());
                if w[alpha] > 1e-12 {
                    let cond = conditional_expectation(&f, &c, &a, alpha).map_err(err)?;
                    worst_ideal = worst_ideal.max((cond - a.element(r, r).re).abs());
                }
            }
        }
    }
    ensure(worst_ideal <= 1e-12, || format!("ideal reconstruction residual {worst_ideal:e}"))?;

    let mut worst_ratio = 0.0_f64;
    for i in 0..100 {
        let n = 2 + i % 3;
        let phi = random_phi(&mut rng, n);
        let delta = 10f64.powf(rng.random_range(-3.0..-1.0));
        let f = random_pointer_tensor(&mut rng, &phi, delta);
        let map = PointerMap::from_phi(phi).map_err(err)?;
        let exact = check_exact_condition(&f, &map).map_err(err)?;
        ensure(!exact.holds, || format!("perturbed tensor {i} passes the exact condition"))?;
        let (ln_coherence, ln_ideal) = ln_von_neumann_residuals(&f, &map).map_err(err)?;
        let bound = 3.0 * delta.sqrt();
        worst_ratio = worst_ratio.max(ln_coherence.exp() / bound).max(ln_ideal.exp() / bound);
        ensure(property_violation(&f)? < 1e-9, || format!("perturbed tensor {i} is not a valid F tensor"))?;
    }
    ensure(worst_ratio <= 1.0, || format!("residual reaches {worst_ratio:.3} of 3√δ"))?;
    Ok(format!(
        "ideal residual {worst_ideal:.1e}; perturbed residuals at most {worst_ratio:.3} of 3√δ"
    ))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for draw in 0..20 {
        let m0 = rng.random_range(0.05..=1.0);
        let theta = rng.random_range(0.05..2.0 * PI - 0.05);
        let energies = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t = rng.random_range(0.2..3.0);
        for n in 1..=10 {
            let mut spec = ChainSpec::new(n, m0, theta).map_err(err)?;
            spec.energies = energies;
            spec.t = t;
            let dense = dense_f_tensor(&spec).map_err(err)?;
            let fact = factorized_f_tensor(&spec).map_err(err)?;
            let gap = dense
                .values()
                .iter()
                .zip(fact.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            ensure(gap <= 1e-9, || format!("draw {draw}, N = {n}: gap {gap:e}"))?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("20 draws x N = 1..10, max entrywise gap {worst:.2e}"))
}

fn decay_points(family: &ChainFamily, perturbed: bool) -> Result<Vec<(usize, f64)>, String> {
    DECAY_SWEEP
        .iter()
        .map(|&n| {
            let f = family.tensor(n, perturbed).map_err(err)?;
            let phi = find_pointer_map(&f).map_err(err)?;
            Ok((n, ln_max_pointer_error(&f, &phi).map_err(err)?))
        })
        .collect()
}

fn criterion_4() -> Check {
    let family = ChainFamily::new(ChainSpec::new(DECAY_SWEEP[0], 0.6, PI).map_err(err)?);
    let points = decay_points(&family, false)?;
    for &(n, l) in &points {
        let oracle = ln_chain_pointer_error(n, 0.8);
        ensure((l - oracle).abs() <= 1e-9 * oracle.abs(), || {
            format!("N = {n}: ln ε = {l} against binomial tail {oracle}")
        })?;
    }
    let fit = fit_decay_points(&points).map_err(err)?;
    let analytic = relative_entropy(0.5, 0.8);
    let c = fit.decay_constant();
    let rel = (c / analytic - 1.0).abs();
    ensure(fit.r_squared >= 0.99, || format!("r² = {}", fit.r_squared))?;
    ensure(rel <= 0.10, || format!("c = {c} is {:.1}% from D = {analytic}", 100.0 * rel))?;
    Ok(format!(
        "c = {c:.5} vs D(1/2||0.8) = {analytic:.5} ({:.2}%), r² = {:.6}",
        100.0 * rel,
        fit.r_squared
    ))
}

fn criterion_5() -> Check {
    let mut worst = 0.0_f64;
    for theta in [PI / 2.0, 3.0 * PI / 4.0] {
        for n in [10, 100, 1000] {
            let spec = ChainSpec::new(n, 0.6, theta).map_err(err)?;
            let f = factorized_f_tensor(&spec).map_err(err)?;
            let expected = n as f64 * (theta / 2.0).cos().abs().ln();
            let got = f.cell_sum(0, 1).ln_abs;
            // Relative error of the magnitude is the absolute error of its logarithm.
            let rel = (got - expected).abs();
            ensure(rel <= 1e-9, || format!("θ = {theta}, N = {n}: ln|Σ F| = {got}, expected {expected}"))?;
            worst = worst.max(rel);
        }
    }
    for n in [10, 100, 1000] {
        let f = factorized_f_tensor(&ChainSpec::new(n, 0.6, PI).map_err(err)?).map_err(err)?;
        for a in 0..2 {
            for (r, s) in [(0, 1), (1, 0)] {
                let z = f.get(r, s, a);
                ensure(z == Complex64::new(0.0, 0.0) && f.log_entry(r, s, a).is_zero(), || {
                    format!("θ = π, N = {n}: F[{r},{s};{a}] = {z}")
                })?;
            }
        }
    }
    Ok(format!("max relative error {worst:.2e}; θ = π coherences exactly zero"))
}

fn criterion_6() -> Check {
    let ns = [100, 200, 400, 800];
    let est = estimate_rate(&ProductFamily::bernoulli(0.8), &ns, &[-0.2]).map_err(err)?;
    let analytic = -relative_entropy(0.4, 0.8);
    ensure((analytic - -0.38190850).abs() < 1e-8, || format!("closed form {analytic}"))?;
    let mut residuals = Vec::new();
    for (j, &n) in ns.iter().enumerate() {
        let s = est.sample(0, j);
        // The window |m̂ + 0.2| ≤ 1/N holds exactly the up-counts k with 2k/N - 1 within 1/N of -0.2.
        let ks = (0..=n).filter(|&k| ((2 * k) as f64 / n as f64 - 1.0 + 0.2).abs() <= 1.0 / n as f64 + 1e-12);
        let oracle = ln_binomial_mass(n, 0.8, ks) / n as f64;
        let e = s.empirical.ok_or_else(|| format!("N = {n}: empty window"))?;
        ensure((e - oracle).abs() <= 1e-9, || format!("N = {n}: empirical {e} vs binomial {oracle}"))?;
        residuals.push((e - analytic).abs());
    }
    let last = est.sample(0, ns.len() - 1).empirical.expect("checked above");
    ensure((last - analytic).abs() <= 0.02, || format!("N = 800: {last} vs {analytic}"))?;
    ensure(residuals.windows(2).all(|w| w[1] < w[0]), || format!("residuals {residuals:?}"))?;
    Ok(format!(
        "σ(-0.2) at N = 800: {last:.6} vs {analytic:.8}; residuals {}",
        residuals.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(" > ")
    ))
}

fn criterion_7() -> Check {
    let template = ChainSpec::new(DECAY_SWEEP[0], 0.6, PI).map_err(err)?;
    let mut lines = Vec::new();
    for (name, kind) in [("flip", PerturbationKind::Flip), ("depolarize", PerturbationKind::Depolarize)] {
        let mut family = ChainFamily::new(template.clone());
        family.perturbation = Some(PerturbationRule {
            kind,
            sites: SiteSelection::First(2),
        });
        let report = stability_test(&family, &DECAY_SWEEP, StabilityOptions::default()).map_err(err)?;
        let shift = report.relative_shift.unwrap_or(f64::INFINITY);
        ensure(report.passed && report.bound_holds && shift <= 0.25, || {
            format!("{name}: shift {shift}, bound {}, notes {:?}", report.bound_holds, report.notes)
        })?;
        lines.push(format!("{name} shift {shift:.2e}"));
    }
    Ok(lines.join(", "))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    for i in 0..100 {
        let n = [2, 3, 4][i % 3];
        let dim = [4, 8, 16][(i / 3) % 3];
        let inst = random_instance(&mut rng, n, dim).map_err(err)?;
        let (sys, app, c, a) = (&inst.system, &inst.apparatus, &inst.amplitudes, &inst.observable);
        let f = f_tensor(&evolve_sectors(sys, app, inst.t).map_err(err)?, app.cells()).map_err(err)?;
        let m_values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = pointer_weights(&f, c).map_err(err)?;
        let mut lhs = 0.0;
        for alpha in 0..n {
            lhs += conditional_expectation(&f, c, a, alpha).map_err(err)? * w[alpha] * m_values[alpha];
        }
        let mut m = CMat::zeros(dim, dim);
        for (alpha, &v) in m_values.iter().enumerate() {
            let p = app.cells().dense_projector(alpha);
            m += CMat::from_fn(dim, dim, |i, j| p[(i, j)] * v);
        }
        let comp = CompositeState::evolve(sys, app, c, inst.t).map_err(err)?;
        let rhs = comp.product_expectation(a.matrix(), m.as_ref());
        let gap = (Complex64::new(lhs, 0.0) - rhs).norm();
        ensure(gap <= 1e-9, || format!("instance {i}: gap {gap:e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("100 instances, max gap {worst:.2e}"))
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let config = dir.path().join("chain.ini");
    std::fs::write(&config, CHAIN_FIXTURE).map_err(err)?;
    for sub in SUBCOMMANDS {
        let mut runs = Vec::new();
        for attempt in 0..2 {
            let out = dir.path().join(format!("{sub}-{attempt}"));
            let o = cli(&[sub], &config, &out);
            ensure(o.status.code() == Some(0), || {
                format!("{sub}: exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr))
            })?;
            runs.push(dir_contents(&out));
        }
        ensure(!runs[0].is_empty() && runs[0] == runs[1], || format!("{sub}: outputs differ between runs"))?;
    }

    let malformed = dir.path().join("malformed.ini");
    std::fs::write(&malformed, CHAIN_FIXTURE.replace("m0 = 0.6", "m0 = 1.5")).map_err(err)?;
    let o = cli(&["run"], &malformed, &dir.path().join("malformed"));
    ensure(o.status.code() == Some(2), || format!("malformed config exits {:?}", o.status.code()))?;

    let large = dir.path().join("large.ini");
    std::fs::write(&large, CHAIN_FIXTURE.replace("N = 4", "N = 20")).map_err(err)?;
    let o = cli(&["run", "--oracle"], &large, &dir.path().join("large"));
    ensure(o.status.code() == Some(3), || format!("over-capacity request exits {:?}", o.status.code()))?;
    Ok("5 subcommands byte-identical; malformed config exits 2; over-capacity exits 3".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("tensor identities on random instances", 60, criterion_1),
        ("ideal and perturbed reconstruction", 30, criterion_2),
        ("dense and factorized chain backends", 120, criterion_3),
        ("exponential pointer fidelity", 60, criterion_4),
        ("off-diagonal decoherence", 30, criterion_5),
        ("large-deviation convergence", 60, criterion_6),
        ("stability under local edits", 90, criterion_7),
        ("conditional-expectation compatibility", 30, criterion_8),
        ("CLI determinism and exit codes", 30, criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed > Duration::from_secs(*budget) {
                Err(format!("{msg}; took {:.1} s, budget {budget} s", elapsed.as_secs_f64()))
            } else {
                Ok(msg)
            }
        });
        match result {
            Ok(msg) => println!("criterion {} PASS  {name}: {msg} [{:.2} s]", i + 1, elapsed.as_secs_f64()),
            Err(msg) => {
                failures += 1;
                println!("criterion {} FAIL  {name}: {msg} [{:.2} s]", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
