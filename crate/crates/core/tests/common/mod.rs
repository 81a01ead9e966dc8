//! Closed-form oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

/// `ln k!` for `k = 0..=n` by direct summation.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// `ln [C(n, k) p^k (1-p)^(n-k)]`.
pub fn ln_binomial_pmf(lf: &[f64], n: usize, k: usize, p: f64) -> f64 {
    lf[n] - lf[k] - lf[n - k] + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

pub fn ln_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln P(k ∈ ks)` for `k ~ Binomial(n, p)`.
pub fn ln_binomial_mass(n: usize, p: f64, ks: impl Iterator<Item = usize>) -> f64 {
    let lf = ln_factorials(n);
    ln_sum_exp(ks.map(|k| ln_binomial_pmf(&lf, n, k, p)))
}

/// `D(q || p)` for Bernoulli laws.
pub fn relative_entropy(q: f64, p: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(q, p) + term(1.0 - q, 1.0 - p)
}

/// `ln max_r ε_r` for the identical-site chain at `θ = π`: the "+" sector keeps
/// up-probability `p` and must land at `m ≥ 0`; the "−" sector is flipped and must land at `m < 0`.
pub fn ln_chain_pointer_error(n: usize, p: f64) -> f64 {
    let half = n.div_ceil(2);
    let plus = ln_binomial_mass(n, p, 0..half);
    let minus = ln_binomial_mass(n, 1.0 - p, half..n + 1);
    plus.max(minus)
}

pub const CHAIN_FIXTURE: &str = "\
[experiment]
model = coleman_hepp
seed = 7
amplitudes = 0.6, 0.8

[coleman_hepp]
N = 4
m0 = 0.6
theta = pi

[sweep]
N = 50, 100, 200, 400

[ldp]
grid = -0.6, -0.2, 0, 0.2, 0.6
N = 100, 200, 400, 800

[perturbation]
kind = flip
first = 2

[verify]
instances = 40
";

pub const SUBCOMMANDS: [&str; 5] = ["run", "sweep", "ldp", "perturb", "verify"];

pub fn cli(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointer-cell-sim"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

/// All files of a directory as sorted `(name, bytes)` pairs.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output directory exists")
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}
