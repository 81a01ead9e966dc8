//! Subcommand execution. Every subcommand turns a loaded experiment into a list of
//! `(file name, contents)` pairs; writing them is left to the caller.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::coarse::{check_ldp_conditions, estimate_rate, CellPartitionSpec, ProductFamily, RateFunctionEstimate};
use crate::coleman_hepp::{
    dense_f_tensor, dense_traversal_f_tensor, factorized_f_tensor, traversal_schedule, ChainFamily, ChainSpec, Mat2,
    PerturbationKind, PerturbationRule, SiteSelection, MAX_DENSE_SITES,
};
use crate::error::Error;
use crate::linalg;
use crate::measurement::{
    check_exact_condition, check_weakened_condition, find_pointer_map, fit_decay_points, ln_max_pointer_error,
    pointer_errors, stability_test, PointerMap, StabilityOptions,
};
use crate::model::composite::COMPOSITE_CAP;
use crate::model::properties::PROPERTY_TOL;
use crate::model::random::random_instance;
use crate::model::{
    check_f_properties, conditional_expectation, evolve_sectors, expectation_s, f_tensor, joint_expectation,
    pointer_weights, Amplitudes, CompositeState, FTensor, MicroSystem, ObservableS,
};

use super::config::{
    parse_config, ChainParams, ExperimentConfig, ModelParams, PerturbationKindSpec, PerturbationParams, SiteOverride,
    SiteSpec,
};
use super::matrix_file::{parse_observable, DenseModelFile};
use super::report::{FEntry, Provenance, RunReport, Verdicts};
use super::text::{fmt_f64, fmt_list, Document, Section};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("{0}")]
    Model(Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Capacity(_) => 3,
            HarnessError::Model(_) | HarnessError::Io(_) => 1,
        }
    }

    fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(vec![msg.into()])
    }
}

impl From<Error> for HarnessError {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity(msg) => HarnessError::Capacity(msg),
            e => HarnessError::Model(e),
        }
    }
}

type HResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    Ldp,
    Perturb,
    Verify,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Cross-check against the dense backend.
    pub oracle: bool,
}

/// A validated config together with the files it references.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub observable: Option<ObservableS>,
    pub dense_model: Option<DenseModelFile>,
    /// SHA-256 over the canonical config and the referenced files.
    pub hash: String,
}

impl Experiment {
    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> HResult<Experiment> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_text(&text, &base)
    }

    pub fn from_text(text: &str, base: &Path) -> HResult<Experiment> {
        let config = parse_config(text).map_err(HarnessError::Config)?;
        let read = |rel: &str| -> HResult<String> {
            let p: PathBuf = base.join(rel);
            fs::read_to_string(&p).map_err(|e| HarnessError::config(format!("cannot read {}: {e}", p.display())))
        };
        let mut hasher = Sha256::new();
        hasher.update(config.to_text());
        let observable = match &config.observable_file {
            None => None,
            Some(f) => {
                let t = read(f)?;
                hasher.update(&t);
                let a = parse_observable(&t)
                    .map_err(|errs| HarnessError::Config(errs.into_iter().map(|e| format!("{f}: {e}")).collect()))?;
                if a.dim() != config.amplitudes.len() {
                    return Err(HarnessError::config(format!(
                        "{f}: observable is {0}x{0} but the system has {1} levels",
                        a.dim(),
                        config.amplitudes.len()
                    )));
                }
                Some(a)
            }
        };
        let dense_model = match &config.model {
            ModelParams::GenericDense(d) => {
                let t = read(&d.model_file)?;
                hasher.update(&t);
                let m = DenseModelFile::parse(&t, d.energies.len()).map_err(|errs| {
                    HarnessError::Config(errs.into_iter().map(|e| format!("{}: {e}", d.model_file)).collect())
                })?;
                Some(m)
            }
            ModelParams::ColemanHepp(_) => None,
        };
        Ok(Experiment {
            config,
            observable,
            dense_model,
            hash: hex::encode(hasher.finalize()),
        })
    }
}

/// Files produced by a subcommand, plus a failed-check message for the property suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
    pub suite_failure: Option<String>,
}

impl Outputs {
    fn files(files: Vec<(String, String)>) -> Self {
        Outputs {
            files,
            suite_failure: None,
        }
    }
}

pub fn execute(cmd: Command, exp: &Experiment, opts: RunOptions) -> HResult<Outputs> {
    match cmd {
        Command::Run => Ok(Outputs::files(vec![("report.txt".into(), run_report(exp, opts)?.to_text())])),
        Command::Sweep => sweep(exp, opts).map(Outputs::files),
        Command::Ldp => ldp(exp).map(Outputs::files),
        Command::Perturb => perturb(exp).map(Outputs::files),
        Command::Verify => verify(exp),
    }
}

/// Runs `execute` on a pool of `workers` threads (all cores when `None`).
pub fn execute_with_workers(cmd: Command, exp: &Experiment, opts: RunOptions, workers: Option<usize>) -> HResult<Outputs> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(cmd, exp, opts))
}

pub fn chain_spec(p: &ChainParams) -> crate::Result<ChainSpec> {
    let mut spec = ChainSpec::new(p.n, p.m0, p.theta)?;
    spec.energies = p.energies;
    spec.t = p.t;
    for (k, o) in &p.overrides {
        let m = match o {
            SiteOverride::Polarization(m) => Mat2::polarized(*m),
            SiteOverride::Matrix(x) => Mat2([[x[0], x[1]], [x[2], x[3]]]),
        };
        spec.site_overrides.insert(*k, m);
    }
    spec.validate()?;
    Ok(spec)
}

fn require_chain(exp: &Experiment, what: &str) -> HResult<ChainSpec> {
    match &exp.config.model {
        ModelParams::ColemanHepp(p) => chain_spec(p).map_err(|e| HarnessError::config(format!("[coleman_hepp]: {e}"))),
        ModelParams::GenericDense(_) => Err(HarnessError::config(format!("{what} requires the coleman_hepp model"))),
    }
}

fn fraction(exp: &Experiment) -> f64 {
    exp.config.measurement_time.unwrap_or(1.0)
}

fn chain_tensor(spec: &ChainSpec, fraction: f64) -> crate::Result<FTensor> {
    if fraction == 1.0 {
        factorized_f_tensor(spec)
    } else {
        traversal_schedule(spec, fraction)
    }
}

fn dense_chain_tensor(spec: &ChainSpec, fraction: f64) -> HResult<FTensor> {
    if spec.n > MAX_DENSE_SITES {
        return Err(HarnessError::Capacity(format!(
            "dense cross-check of a {}-site chain exceeds the dense limit of {MAX_DENSE_SITES} sites",
            spec.n
        )));
    }
    Ok(if fraction == 1.0 {
        dense_f_tensor(spec)?
    } else {
        dense_traversal_f_tensor(spec, fraction)?
    })
}

fn max_entry_gap(a: &FTensor, b: &FTensor) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn amplitudes(exp: &Experiment) -> HResult<Amplitudes> {
    Amplitudes::new(exp.config.amplitudes.clone()).map_err(|e| HarnessError::config(format!("experiment.amplitudes: {e}")))
}

/// `σ_z` for the chain, `diag(1, .., n)` for generic models.
fn observable(exp: &Experiment, n: usize) -> ObservableS {
    match (&exp.observable, &exp.config.model) {
        (Some(a), _) => a.clone(),
        (None, ModelParams::ColemanHepp(_)) => ObservableS::diagonal(&[1.0, -1.0]),
        (None, ModelParams::GenericDense(_)) => ObservableS::diagonal(&(1..=n).map(|r| r as f64).collect::<Vec<_>>()),
    }
}

fn verdicts(exp: &Experiment, f: &FTensor, phi: &PointerMap, particles: Option<usize>) -> HResult<Verdicts> {
    let exact = check_exact_condition(f, phi)?;
    let ln_errors: Vec<f64> = pointer_errors(f, phi)?.iter().map(|e| e.ln_abs).collect();
    let ln_max = ln_errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weakened = match (exp.config.decay_constant, particles) {
        (Some(k), Some(np)) => Some((k, check_weakened_condition(f, phi, np, k)?.satisfied)),
        _ => None,
    };
    Ok(Verdicts {
        pointer_map: phi.phi().to_vec(),
        pointer_confidence: phi.confidence().to_vec(),
        exact_holds: exact.holds,
        exact_residual: exact.residual,
        ln_errors,
        implied_constant: particles.map(|np| -ln_max / np as f64),
        weakened,
    })
}

pub fn run_report(exp: &Experiment, opts: RunOptions) -> HResult<RunReport> {
    let c = amplitudes(exp)?;
    let (f, particles, backend, oracle) = match &exp.config.model {
        ModelParams::ColemanHepp(_) => {
            let spec = require_chain(exp, "run")?;
            let frac = fraction(exp);
            let f = chain_tensor(&spec, frac)?;
            let oracle = if opts.oracle {
                Some(max_entry_gap(&f, &dense_chain_tensor(&spec, frac)?))
            } else {
                None
            };
            let backend = if opts.oracle { "factorized+dense-oracle" } else { "factorized" };
            (f, Some(spec.n), backend, oracle)
        }
        ModelParams::GenericDense(d) => {
            let model = exp.dense_model.as_ref().expect("loaded with the config");
            let app = model.apparatus().map_err(|e| match e {
                Error::Capacity(m) => HarnessError::Capacity(m),
                e => HarnessError::config(format!("{}: {e}", d.model_file)),
            })?;
            let sys = MicroSystem::with_energies(d.energies.clone())
                .map_err(|e| HarnessError::config(format!("generic_dense.energies: {e}")))?;
            let f = f_tensor(&evolve_sectors(&sys, &app, d.t)?, app.cells())?;
            let oracle = if opts.oracle {
                if sys.dim() * app.dim() > COMPOSITE_CAP {
                    return Err(HarnessError::Capacity(format!(
                        "composite cross-check of dimension {} exceeds {COMPOSITE_CAP}",
                        sys.dim() * app.dim()
                    )));
                }
                let comp = CompositeState::evolve(&sys, &app, &c, d.t)?;
                let a = observable(exp, f.n());
                let w = pointer_weights(&f, &c)?;
                let mut gap = (expectation_s(&f, &c, &a)? - comp.expectation_s(&a).re).abs();
                for alpha in 0..w.len() {
                    gap = gap.max((comp.weight(&app, alpha).re - w[alpha]).abs());
                    gap = gap.max((joint_expectation(&f, &c, &a, alpha)? - comp.joint(&app, &a, alpha).re).abs());
                }
                Some(gap)
            } else {
                None
            };
            let backend = if opts.oracle { "dense+composite-oracle" } else { "dense" };
            (f, d.particles, backend, oracle)
        }
    };

    let n = f.n();
    let a = observable(exp, n);
    let weights = pointer_weights(&f, &c)?;
    let expectation = expectation_s(&f, &c, &a)?;
    let conditional = (0..n)
        .map(|alpha| match conditional_expectation(&f, &c, &a, alpha) {
            Ok(v) => Ok(Some(v)),
            Err(Error::NullMacrostate { .. }) => Ok(None),
            Err(e) => Err(HarnessError::from(e)),
        })
        .collect::<HResult<Vec<_>>>()?;
    if exp.config.decay_constant.is_some() && particles.is_none() {
        return Err(HarnessError::config(
            "experiment.decay_constant needs a particle count (generic_dense.particles)",
        ));
    }
    let verdicts = match find_pointer_map(&f) {
        Ok(phi) => Ok(verdicts(exp, &f, &phi, particles)?),
        Err(Error::AmbiguousPointer(msg)) => Err(msg),
        Err(e) => return Err(e.into()),
    };
    let mut f_entries = Vec::with_capacity(n * n * n);
    for r in 0..n {
        for s in 0..n {
            for alpha in 0..n {
                f_entries.push(FEntry {
                    r,
                    s,
                    alpha,
                    value: f.get(r, s, alpha),
                    log: f.log_entry(r, s, alpha),
                });
            }
        }
    }
    Ok(RunReport {
        provenance: Provenance {
            config_sha256: exp.hash.clone(),
            backend: backend.into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        model: exp.config.kind().name().into(),
        particles,
        t: f.t(),
        amplitudes: exp.config.amplitudes.clone(),
        sectors: n,
        f_entries,
        weights,
        expectation,
        conditional,
        verdicts,
        properties: check_f_properties(&f)?,
        oracle_discrepancy: oracle,
    })
}

pub const SWEEP_HEADER: [&str; 7] = ["N", "eps_max", "log_eps_max", "w_plus", "w_minus", "offdiag_max", "status"];

/// Cell index of the `+` reading (non-negative magnetization).
const PLUS_CELL: usize = 1;
const MINUS_CELL: usize = 0;

struct SweepRow {
    n: usize,
    outcome: std::result::Result<(f64, [f64; 2], f64, Option<f64>), String>,
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn sweep(exp: &Experiment, opts: RunOptions) -> HResult<Vec<(String, String)>> {
    let spec = require_chain(exp, "sweep")?;
    let ns = exp
        .config
        .sweep
        .clone()
        .ok_or_else(|| HarnessError::config("sweep needs a [sweep] section"))?;
    if opts.oracle {
        if let Some(&n) = ns.iter().find(|&&n| n > MAX_DENSE_SITES) {
            return Err(HarnessError::Capacity(format!(
                "dense cross-check at N = {n} exceeds the dense limit of {MAX_DENSE_SITES} sites"
            )));
        }
    }
    let c = amplitudes(exp)?;
    let frac = fraction(exp);
    let rows: Vec<SweepRow> = ns
        .par_iter()
        .map(|&n| {
            let point = || -> HResult<(f64, [f64; 2], f64, Option<f64>)> {
                let s = spec.with_n(n);
                let f = chain_tensor(&s, frac)?;
                let phi = find_pointer_map(&f)?;
                let ln_eps = ln_max_pointer_error(&f, &phi)?;
                let w = pointer_weights(&f, &c)?;
                let mut off = 0.0f64;
                for alpha in 0..2 {
                    off = off.max(f.get(0, 1, alpha).norm()).max(f.get(1, 0, alpha).norm());
                }
                let gap = if opts.oracle {
                    Some(max_entry_gap(&f, &dense_chain_tensor(&s, frac)?))
                } else {
                    None
                };
                Ok((ln_eps, [w[PLUS_CELL], w[MINUS_CELL]], off, gap))
            };
            SweepRow {
                n,
                outcome: point().map_err(|e| e.to_string()),
            }
        })
        .collect();

    let mut csv_rows = Vec::new();
    let mut fit_points = Vec::new();
    let mut failed = Vec::new();
    let mut oracle_gap = 0.0f64;
    for row in &rows {
        match &row.outcome {
            Ok((ln_eps, w, off, gap)) => {
                let eps = ln_eps.exp();
                let status = if eps == 0.0 && ln_eps.is_finite() { "log_only" } else { "ok" };
                csv_rows.push(vec![
                    row.n.to_string(),
                    fmt_f64(eps),
                    fmt_f64(*ln_eps),
                    fmt_f64(w[0]),
                    fmt_f64(w[1]),
                    fmt_f64(*off),
                    status.into(),
                ]);
                if ln_eps.is_finite() {
                    fit_points.push((row.n, *ln_eps));
                } else {
                    failed.push(row.n);
                }
                oracle_gap = oracle_gap.max(gap.unwrap_or(0.0));
            }
            Err(msg) => {
                csv_rows.push(vec![
                    row.n.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("failed: {msg}"),
                ]);
                failed.push(row.n);
            }
        }
    }

    let mut doc = Document {
        header: Some("pointer-cell-sim sweep fit v1".into()),
        sections: Vec::new(),
    };
    let mut s = Section::new("fit");
    s.push("provenance", exp.hash.clone());
    s.push("points", fmt_list(&fit_points, |p| p.0.to_string()));
    s.push("failed_points", fmt_list(&failed, |n| n.to_string()));
    match fit_decay_points(&fit_points) {
        Ok(fit) => {
            s.push("status", "ok");
            s.push("slope", fmt_f64(fit.slope));
            s.push("intercept", fmt_f64(fit.intercept));
            s.push("r_squared", fmt_f64(fit.r_squared));
            s.push("decay_constant", fmt_f64(fit.decay_constant()));
            s.push("certified_constant", fmt_f64(fit.certified_constant()));
            s.push("exponential", fit.is_exponential().to_string());
            s.push("excluded", fmt_list(&fit.excluded, |n| n.to_string()));
            for w in &fit.warnings {
                s.push("warning", w.clone());
            }
        }
        Err(e) => s.push("status", format!("refused: {e}")),
    }
    doc.sections.push(s);
    if opts.oracle {
        let mut s = Section::new("oracle");
        s.push("max_discrepancy", fmt_f64(oracle_gap));
        doc.sections.push(s);
    }
    Ok(vec![
        ("sweep.csv".into(), csv_text(&SWEEP_HEADER, csv_rows)),
        ("sweep_fit.txt".into(), doc.to_text()),
    ])
}

pub const LDP_HEADER: [&str; 6] = ["m", "N", "empirical_rate", "analytic_rate", "residual", "status"];

/// Up-population of a site state after the sector-`r` rotation.
fn rotated_up(spec: &ChainSpec, r: usize, rho: &Mat2) -> f64 {
    let u = spec.site_rotation(r);
    u.adjoint().mul(rho).mul(&u).0[0][0].re.clamp(0.0, 1.0)
}

fn edited_state(kind: PerturbationKindSpec, current: &Mat2) -> Mat2 {
    match kind {
        PerturbationKindSpec::Flip => current.flipped(),
        PerturbationKindSpec::Depolarize => Mat2::polarized(0.0),
        PerturbationKindSpec::Polarization(m) => Mat2::polarized(m),
    }
}

/// Magnetization statistics of the fully traversed chain in sector `r`.
fn sector_family(spec: &ChainSpec, r: usize, edit: Option<&PerturbationParams>) -> ProductFamily {
    let mut fam = ProductFamily::bernoulli(rotated_up(spec, r, &spec.bulk_state()));
    for (&k, rho) in &spec.site_overrides {
        fam.overrides.insert(k, rotated_up(spec, r, rho));
    }
    if let Some(p) = edit {
        match &p.sites {
            SiteSpec::First(k) => {
                for site in 0..*k {
                    fam.overrides.insert(site, rotated_up(spec, r, &edited_state(p.kind, &spec.site_state(site))));
                }
            }
            SiteSpec::Sites(v) => {
                for &site in v {
                    fam.overrides.insert(site, rotated_up(spec, r, &edited_state(p.kind, &spec.site_state(site))));
                }
            }
            SiteSpec::Fraction(f) => {
                let p_edit = rotated_up(spec, r, &edited_state(p.kind, &spec.bulk_state()));
                fam.extensive_edit = Some((*f, p_edit));
            }
        }
    }
    fam
}

fn ldp(exp: &Experiment) -> HResult<Vec<(String, String)>> {
    let spec = require_chain(exp, "ldp")?;
    let params = exp
        .config
        .ldp
        .clone()
        .ok_or_else(|| HarnessError::config("ldp needs an [ldp] section"))?;
    let estimates = (0..2)
        .map(|r| estimate_rate(&sector_family(&spec, r, None), &params.n_values, &params.grid))
        .collect::<crate::Result<Vec<RateFunctionEstimate>>>()?;
    let chosen = &estimates[params.sector.index()];

    let mut jobs: Vec<(usize, usize)> = (0..chosen.n_values.len())
        .flat_map(|k| (0..chosen.grid.len()).map(move |i| (k, i)))
        .collect();
    jobs.sort_by(|a, b| {
        chosen.n_values[a.0]
            .cmp(&chosen.n_values[b.0])
            .then(chosen.grid[a.1].total_cmp(&chosen.grid[b.1]))
    });
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let rows = jobs
        .into_iter()
        .map(|(k, i)| {
            let s = chosen.sample(i, k);
            vec![
                fmt_f64(s.m),
                s.n.to_string(),
                opt(s.empirical),
                fmt_f64(s.analytic),
                opt(s.residual),
                if s.empirical.is_some() { "ok" } else { "empty_window" }.to_string(),
            ]
        })
        .collect();

    let mut doc = Document {
        header: Some("pointer-cell-sim ldp summary v1".into()),
        sections: Vec::new(),
    };
    let mut s = Section::new("rate");
    s.push("provenance", exp.hash.clone());
    s.push("sector", if params.sector.index() == 0 { "+" } else { "-" });
    s.push("bulk_up_probability", fmt_f64(chosen.family.p_up));
    s.push("analytic_max_location", fmt_f64(chosen.family.analytic_max_location()));
    s.push("fitted_max_location", fmt_f64(chosen.fitted_max_location));
    s.push("grid", fmt_list(&chosen.grid, |x| fmt_f64(*x)));
    s.push(
        "extrapolated_rate",
        fmt_list(&chosen.extrapolated, |x| x.map_or_else(|| "undefined".into(), fmt_f64)),
    );
    s.push("N", fmt_list(&chosen.n_values, |n| n.to_string()));
    s.push(
        "max_abs_residual",
        fmt_list(
            &(0..chosen.n_values.len()).map(|k| chosen.max_residual(k)).collect::<Vec<_>>(),
            |x| x.map_or_else(|| "undefined".into(), fmt_f64),
        ),
    );
    doc.sections.push(s);

    let mut s = Section::new("conditions");
    let largest = *params.n_values.last().expect("validated non-empty");
    let conditions = (|| -> crate::Result<_> {
        let cells = CellPartitionSpec::new(-1.0, 1.0, 2)?;
        let phi = find_pointer_map(&factorized_f_tensor(&spec.with_n(largest))?)?;
        let perturbed = match &exp.config.perturbation {
            None => None,
            Some(p) => Some(
                (0..2)
                    .map(|r| estimate_rate(&sector_family(&spec, r, Some(p)), &params.n_values, &params.grid))
                    .collect::<crate::Result<Vec<_>>>()?,
            ),
        };
        check_ldp_conditions(&estimates, &cells, &phi, perturbed.as_deref())
    })();
    match conditions {
        Ok(c) => {
            s.push("maximizers", fmt_list(&c.maximizers, |x| fmt_f64(*x)));
            s.push("unique_maximizer", c.unique_maximizer.to_string());
            s.push("interior", c.interior.to_string());
            s.push("gap_constant", c.gap_constant.map_or_else(|| "undefined".into(), fmt_f64));
            s.push(
                "perturbation_residual",
                c.perturbation_residual.map_or_else(|| "undefined".into(), fmt_f64),
            );
            s.push(
                "local_stable",
                c.local_stable.map_or_else(|| "undefined".into(), |b| b.to_string()),
            );
            s.push("passed", c.passed().to_string());
        }
        Err(e) => s.push("status", format!("not evaluated: {e}")),
    }
    doc.sections.push(s);
    Ok(vec![
        ("ldp.csv".into(), csv_text(&LDP_HEADER, rows)),
        ("ldp_summary.txt".into(), doc.to_text()),
    ])
}

pub const PERTURB_HEADER: [&str; 4] = ["N", "support", "log_eps_baseline", "log_eps_perturbed"];

pub fn perturbation_rule(p: &PerturbationParams) -> PerturbationRule {
    PerturbationRule {
        kind: match p.kind {
            PerturbationKindSpec::Flip => PerturbationKind::Flip,
            PerturbationKindSpec::Depolarize => PerturbationKind::Depolarize,
            PerturbationKindSpec::Polarization(m) => PerturbationKind::Polarization(m),
        },
        sites: match &p.sites {
            SiteSpec::First(k) => SiteSelection::First(*k),
            SiteSpec::Fraction(f) => SiteSelection::Fraction(*f),
            SiteSpec::Sites(v) => SiteSelection::Explicit(v.clone()),
        },
    }
}

fn perturb(exp: &Experiment) -> HResult<Vec<(String, String)>> {
    let spec = require_chain(exp, "perturb")?;
    let params = exp
        .config
        .perturbation
        .clone()
        .ok_or_else(|| HarnessError::config("perturb needs a [perturbation] section"))?;
    let ns = exp
        .config
        .sweep
        .clone()
        .ok_or_else(|| HarnessError::config("perturb needs a [sweep] section"))?;
    let rule = perturbation_rule(&params);
    let supports: Vec<usize> = ns.iter().map(|&n| rule.sites_for(n).len()).collect();
    if !params.force && supports.windows(2).any(|w| w[0] != w[1]) {
        return Err(HarnessError::config(format!(
            "[perturbation]: support {supports:?} grows with N, so the perturbation is not local; set force = true to run it anyway"
        )));
    }
    let family = ChainFamily {
        template: spec,
        perturbation: Some(rule),
        fraction: fraction(exp),
    };
    let report = stability_test(
        &family,
        &ns,
        StabilityOptions {
            force_nonlocal: params.force,
            ..StabilityOptions::default()
        },
    )?;
    let rows = report
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                p.support.to_string(),
                fmt_f64(p.ln_error_baseline),
                fmt_f64(p.ln_error_perturbed),
            ]
        })
        .collect();
    let opts = StabilityOptions::default();
    let mut doc = Document {
        header: Some("pointer-cell-sim stability report v1".into()),
        sections: Vec::new(),
    };
    let mut s = Section::new("stability");
    s.push("provenance", exp.hash.clone());
    s.push("band", fmt_f64(opts.band));
    s.push("local", report.local.to_string());
    s.push("baseline_decay_constant", fmt_f64(report.baseline.decay_constant()));
    s.push("baseline_r_squared", fmt_f64(report.baseline.r_squared));
    match &report.perturbed {
        Some(p) => {
            s.push("perturbed_decay_constant", fmt_f64(p.decay_constant()));
            s.push("perturbed_r_squared", fmt_f64(p.r_squared));
        }
        None => s.push("perturbed_decay_constant", "undefined"),
    }
    s.push("relative_shift", report.relative_shift.map_or_else(|| "undefined".into(), fmt_f64));
    s.push("bound_holds", report.bound_holds.to_string());
    s.push("passed", report.passed.to_string());
    for n in &report.notes {
        s.push("note", n.clone());
    }
    doc.sections.push(s);
    Ok(vec![
        ("perturb.csv".into(), csv_text(&PERTURB_HEADER, rows)),
        ("perturb_report.txt".into(), doc.to_text()),
    ])
}

/// Per-instance maxima of the random property suite.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InstanceCheck {
    pub n: usize,
    pub dim: usize,
    pub property_violation: f64,
    /// Largest gap between the tensor functionals and the composite density matrix.
    pub composite_gap: f64,
    /// `|Σ_α E(A|K_α) w_α M_α - E(A ⊗ M)|`.
    pub compatibility_residual: f64,
}

pub const VERIFY_SIZES: [usize; 3] = [2, 3, 4];
pub const VERIFY_DIMS: [usize; 3] = [4, 8, 16];

/// One random instance: evolved tensor properties, composite consistency and conditional-expectation compatibility.
pub fn check_instance(seed: u64, index: u64) -> crate::Result<InstanceCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = VERIFY_SIZES[rng.random_range(0..VERIFY_SIZES.len())];
    let dim = VERIFY_DIMS[rng.random_range(0..VERIFY_DIMS.len())];
    let inst = random_instance(&mut rng, n, dim)?;
    let (sys, app, c, a) = (&inst.system, &inst.apparatus, &inst.amplitudes, &inst.observable);
    let f = f_tensor(&evolve_sectors(sys, app, inst.t)?, app.cells())?;
    let property_violation = check_f_properties(&f)?.max_violation();

    let comp = CompositeState::evolve(sys, app, c, inst.t)?;
    let weights = pointer_weights(&f, c)?;
    let mut gap = (expectation_s(&f, c, a)? - comp.expectation_s(a).re).abs();
    for alpha in 0..n {
        gap = gap.max((weights[alpha] - comp.weight(app, alpha).re).abs());
        gap = gap.max((joint_expectation(&f, c, a, alpha)? - comp.joint(app, a, alpha).re).abs());
    }

    let m_values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut m = linalg::zeros(dim);
    for (alpha, &mv) in m_values.iter().enumerate() {
        let pi = app.cells().dense_projector(alpha);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += pi[(i, j)] * mv;
            }
        }
    }
    let mut lhs = 0.0;
    for alpha in 0..n {
        match conditional_expectation(&f, c, a, alpha) {
            Ok(v) => lhs += v * weights[alpha] * m_values[alpha],
            Err(Error::NullMacrostate { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let rhs = comp.product_expectation(a.matrix(), m.as_ref());
    Ok(InstanceCheck {
        n,
        dim,
        property_violation,
        composite_gap: gap,
        compatibility_residual: (Complex64::new(lhs, 0.0) - rhs).norm(),
    })
}

fn verify(exp: &Experiment) -> HResult<Outputs> {
    let seed = exp.config.seed;
    let count = exp.config.verify_instances;
    let checks = (0..count as u64)
        .into_par_iter()
        .map(|i| check_instance(seed, i))
        .collect::<crate::Result<Vec<_>>>()?;
    let tol = PROPERTY_TOL;
    let max = |g: fn(&InstanceCheck) -> f64| checks.iter().map(g).fold(0.0, f64::max);
    let failures: Vec<usize> = checks
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            !(c.property_violation < tol && c.composite_gap < tol && c.compatibility_residual < tol)
        })
        .map(|(i, _)| i)
        .collect();
    let mut doc = Document {
        header: Some("pointer-cell-sim verify report v1".into()),
        sections: Vec::new(),
    };
    let mut s = Section::new("suite");
    s.push("provenance", exp.hash.clone());
    s.push("seed", seed.to_string());
    s.push("instances", count.to_string());
    s.push("tolerance", fmt_f64(tol));
    s.push("max_property_violation", fmt_f64(max(|c| c.property_violation)));
    s.push("max_composite_gap", fmt_f64(max(|c| c.composite_gap)));
    s.push("max_compatibility_residual", fmt_f64(max(|c| c.compatibility_residual)));
    s.push("failed_instances", fmt_list(&failures, |i| i.to_string()));
    s.push("passed", failures.is_empty().to_string());
    doc.sections.push(s);
    let suite_failure = (!failures.is_empty()).then(|| format!("{} of {count} random instances failed", failures.len()));
    Ok(Outputs {
        files: vec![("verify_report.txt".into(), doc.to_text())],
        suite_failure,
    })
}
