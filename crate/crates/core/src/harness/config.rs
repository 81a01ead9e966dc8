//! Experiment configuration: parsing with total diagnostics, validation and canonical serialization.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::model::system::NORMALIZATION_TOL;

use super::text::{
    fmt_complex, fmt_f64, fmt_list, parse_bool, parse_complex, parse_f64, parse_list, parse_usize, Document, Entry,
    Section,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    ColemanHepp,
    GenericDense,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ColemanHepp => "coleman_hepp",
            ModelKind::GenericDense => "generic_dense",
        }
    }
}

/// Replacement initial state of one chain site.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteOverride {
    Polarization(f64),
    /// Row-major 2x2 density matrix.
    Matrix([Complex64; 4]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub n: usize,
    pub m0: f64,
    pub theta: f64,
    pub energies: (f64, f64),
    pub t: f64,
    pub overrides: Vec<(usize, SiteOverride)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub model_file: String,
    pub energies: Vec<f64>,
    pub t: f64,
    /// Particle count used for the implied decay constant.
    pub particles: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    ColemanHepp(ChainParams),
    GenericDense(DenseParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Plus,
    Minus,
}

impl Sector {
    pub fn index(self) -> usize {
        match self {
            Sector::Plus => 0,
            Sector::Minus => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Sector::Plus => "+",
            Sector::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpParams {
    pub grid: Vec<f64>,
    pub n_values: Vec<usize>,
    pub sector: Sector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationKindSpec {
    Flip,
    Depolarize,
    Polarization(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SiteSpec {
    First(usize),
    Fraction(f64),
    Sites(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationParams {
    pub kind: PerturbationKindSpec,
    pub sites: SiteSpec,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub amplitudes: Vec<Complex64>,
    pub observable_file: Option<String>,
    /// Traversal fraction at which the chain's pointer is read.
    pub measurement_time: Option<f64>,
    /// Constant `c` of the bound `ε_r ≤ exp(-cN)` to test the report against.
    pub decay_constant: Option<f64>,
    pub model: ModelParams,
    pub sweep: Option<Vec<usize>>,
    pub ldp: Option<LdpParams>,
    pub perturbation: Option<PerturbationParams>,
    pub verify_instances: usize,
}

pub const DEFAULT_VERIFY_INSTANCES: usize = 200;

impl ExperimentConfig {
    pub fn kind(&self) -> ModelKind {
        match self.model {
            ModelParams::ColemanHepp(_) => ModelKind::ColemanHepp,
            ModelParams::GenericDense(_) => ModelKind::GenericDense,
        }
    }

    pub fn chain(&self) -> Option<&ChainParams> {
        match &self.model {
            ModelParams::ColemanHepp(c) => Some(c),
            ModelParams::GenericDense(_) => None,
        }
    }

    pub fn to_text(&self) -> String {
        self.to_document().to_text()
    }

    fn to_document(&self) -> Document {
        let mut sections = Vec::new();
        let mut exp = Section::new("experiment");
        exp.push("model", self.kind().name());
        exp.push("seed", self.seed.to_string());
        exp.push("amplitudes", fmt_list(&self.amplitudes, |z| fmt_complex(*z)));
        if let Some(f) = &self.observable_file {
            exp.push("observable", f.clone());
        }
        if let Some(x) = self.measurement_time {
            exp.push("measurement_time", fmt_f64(x));
        }
        if let Some(x) = self.decay_constant {
            exp.push("decay_constant", fmt_f64(x));
        }
        sections.push(exp);

        match &self.model {
            ModelParams::ColemanHepp(c) => {
                let mut s = Section::new("coleman_hepp");
                s.push("N", c.n.to_string());
                s.push("m0", fmt_f64(c.m0));
                s.push("theta", fmt_f64(c.theta));
                s.push("energies", format!("{}, {}", fmt_f64(c.energies.0), fmt_f64(c.energies.1)));
                s.push("t", fmt_f64(c.t));
                for (k, o) in &c.overrides {
                    let v = match o {
                        SiteOverride::Polarization(m) => format!("{k} polarization {}", fmt_f64(*m)),
                        SiteOverride::Matrix(x) => format!(
                            "{k} matrix {}",
                            x.iter().map(|z| fmt_complex(*z)).collect::<Vec<_>>().join(" ")
                        ),
                    };
                    s.push("override", v);
                }
                sections.push(s);
            }
            ModelParams::GenericDense(d) => {
                let mut s = Section::new("generic_dense");
                s.push("model_file", d.model_file.clone());
                s.push("energies", fmt_list(&d.energies, |x| fmt_f64(*x)));
                s.push("t", fmt_f64(d.t));
                if let Some(n) = d.particles {
                    s.push("particles", n.to_string());
                }
                sections.push(s);
            }
        }

        if let Some(ns) = &self.sweep {
            let mut s = Section::new("sweep");
            s.push("N", fmt_list(ns, |n| n.to_string()));
            sections.push(s);
        }
        if let Some(l) = &self.ldp {
            let mut s = Section::new("ldp");
            s.push("grid", fmt_list(&l.grid, |x| fmt_f64(*x)));
            s.push("N", fmt_list(&l.n_values, |n| n.to_string()));
            s.push("sector", l.sector.name());
            sections.push(s);
        }
        if let Some(p) = &self.perturbation {
            let mut s = Section::new("perturbation");
            match p.kind {
                PerturbationKindSpec::Flip => s.push("kind", "flip"),
                PerturbationKindSpec::Depolarize => s.push("kind", "depolarize"),
                PerturbationKindSpec::Polarization(m) => {
                    s.push("kind", "polarization");
                    s.push("polarization", fmt_f64(m));
                }
            }
            match &p.sites {
                SiteSpec::First(k) => s.push("first", k.to_string()),
                SiteSpec::Fraction(f) => s.push("fraction", fmt_f64(*f)),
                SiteSpec::Sites(v) => s.push("sites", fmt_list(v, |k| k.to_string())),
            }
            s.push("force", p.force.to_string());
            sections.push(s);
        }
        let mut s = Section::new("verify");
        s.push("instances", self.verify_instances.to_string());
        sections.push(s);
        Document { header: None, sections }
    }
}

/// Accumulates diagnostics while reading typed values out of sections.
struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn section<'a>(&mut self, doc: &'a Document, name: &str, allowed: &[&str], repeatable: &[&str]) -> Option<&'a Section> {
        let s = doc.section(name)?;
        let mut seen = BTreeSet::new();
        for e in &s.entries {
            if !allowed.contains(&e.key.as_str()) {
                self.errors.push(format!("line {}: unknown key `{}` in [{name}]", e.line, e.key));
            } else if !seen.insert(e.key.as_str()) && !repeatable.contains(&e.key.as_str()) {
                self.errors.push(format!("line {}: `{name}.{}` is given more than once", e.line, e.key));
            }
        }
        Some(s)
    }

    fn value<T>(&mut self, s: &Section, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let e = s.get(key)?;
        self.convert(&s.name, e, parse)
    }

    fn convert<T>(&mut self, section: &str, e: &Entry, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        match parse(&e.value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.errors.push(format!("line {}: {section}.{}: {msg}", e.line, e.key));
                None
            }
        }
    }

    fn required<T>(&mut self, s: &Section, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if s.get(key).is_none() {
            self.errors.push(format!("line {}: missing required key `{}.{key}`", s.line, s.name));
            return None;
        }
        self.value(s, key, parse)
    }

    fn check(&mut self, s: &Section, key: &str, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            let line = s.get(key).map_or(s.line, |e| e.line);
            self.errors.push(format!("line {line}: {}.{key}: {}", s.name, msg()));
        }
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_override(s: &str) -> Result<(usize, SiteOverride), String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let site = parts.first().ok_or("empty override")?;
    let site = parse_usize(site)?;
    match parts.get(1).copied() {
        Some("polarization") if parts.len() == 3 => {
            let m = finite(parts[2])?;
            if !(-1.0..=1.0).contains(&m) {
                return Err(format!("polarization {m} is not in [-1, 1]"));
            }
            Ok((site, SiteOverride::Polarization(m)))
        }
        Some("matrix") if parts.len() == 6 => {
            let mut x = [Complex64::new(0.0, 0.0); 4];
            for (slot, p) in x.iter_mut().zip(&parts[2..]) {
                *slot = parse_complex(p)?;
            }
            Ok((site, SiteOverride::Matrix(x)))
        }
        _ => Err(format!(
            "expected `<site> polarization <m>` or `<site> matrix <a> <b> <c> <d>`, found `{s}`"
        )),
    }
}

fn strictly_increasing(ns: &[usize]) -> bool {
    ns.windows(2).all(|w| w[0] < w[1])
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let doc = Document::parse(text, None)?;
    let mut rd = Reader { errors: Vec::new() };
    let known = ["experiment", "coleman_hepp", "generic_dense", "sweep", "ldp", "perturbation", "verify"];
    for s in &doc.sections {
        if !known.contains(&s.name.as_str()) {
            rd.errors.push(format!("line {}: unknown section [{}]", s.line, s.name));
        }
    }

    let exp = rd.section(
        &doc,
        "experiment",
        &["model", "seed", "amplitudes", "observable", "measurement_time", "decay_constant"],
        &[],
    );
    let Some(exp) = exp else {
        rd.errors.push("missing section [experiment]".into());
        return Err(rd.errors);
    };
    let kind = rd.required(exp, "model", |v| match v {
        "coleman_hepp" => Ok(ModelKind::ColemanHepp),
        "generic_dense" => Ok(ModelKind::GenericDense),
        x => Err(format!("unknown model `{x}` (expected coleman_hepp or generic_dense)")),
    });
    let seed = rd.required(exp, "seed", |v| v.parse::<u64>().map_err(|_| format!("invalid seed `{v}`")));
    let amplitudes = rd.required(exp, "amplitudes", |v| parse_list(v, parse_complex));
    if let Some(c) = &amplitudes {
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        rd.check(exp, "amplitudes", c.is_empty() || (norm - 1.0).abs() <= NORMALIZATION_TOL, || {
            format!("amplitudes are not normalized (sum of |c_r|^2 is {norm})")
        });
        rd.check(exp, "amplitudes", !c.is_empty(), || "no amplitudes given".into());
    }
    let observable_file = exp.get("observable").map(|e| e.value.clone());
    let measurement_time = rd.value(exp, "measurement_time", finite);
    if let Some(x) = measurement_time {
        rd.check(exp, "measurement_time", (0.0..=1.0).contains(&x), || {
            format!("traversal fraction {x} is not in [0, 1]")
        });
    }
    let decay_constant = rd.value(exp, "decay_constant", finite);
    if let Some(c) = decay_constant {
        rd.check(exp, "decay_constant", c > 0.0, || format!("decay constant {c} must be positive"));
    }

    let chain = rd.section(&doc, "coleman_hepp", &["N", "m0", "theta", "energies", "t", "override"], &["override"]);
    let dense = rd.section(&doc, "generic_dense", &["model_file", "energies", "t", "particles"], &[]);
    let model = match kind {
        Some(ModelKind::ColemanHepp) => {
            if let Some(d) = dense {
                rd.errors.push(format!("line {}: [generic_dense] given for model coleman_hepp", d.line));
            }
            match chain {
                None => {
                    rd.errors.push("missing section [coleman_hepp]".into());
                    None
                }
                Some(s) => parse_chain(&mut rd, s),
            }
        }
        Some(ModelKind::GenericDense) => {
            if let Some(c) = chain {
                rd.errors.push(format!("line {}: [coleman_hepp] given for model generic_dense", c.line));
            }
            if measurement_time.is_some() {
                rd.check(exp, "measurement_time", false, || {
                    "a traversal fraction applies only to the coleman_hepp model".into()
                });
            }
            match dense {
                None => {
                    rd.errors.push("missing section [generic_dense]".into());
                    None
                }
                Some(s) => parse_dense(&mut rd, s),
            }
        }
        None => None,
    };
    if let (Some(ModelKind::ColemanHepp), Some(c)) = (kind, &amplitudes) {
        rd.check(exp, "amplitudes", c.len() == 2, || {
            format!("the coleman_hepp model has 2 sectors, got {} amplitudes", c.len())
        });
    }
    if let (Some(ModelParams::GenericDense(d)), Some(c)) = (&model, &amplitudes) {
        rd.check(exp, "amplitudes", c.len() == d.energies.len(), || {
            format!("{} amplitudes for {} energy levels", c.len(), d.energies.len())
        });
    }

    let sweep = rd.section(&doc, "sweep", &["N"], &[]).and_then(|s| {
        let ns = rd.required(s, "N", |v| parse_list(v, parse_usize))?;
        rd.check(s, "N", !ns.is_empty(), || "empty sweep".into());
        rd.check(s, "N", strictly_increasing(&ns), || "sweep values must be strictly increasing".into());
        rd.check(s, "N", !ns.contains(&0), || "chain lengths must be positive".into());
        Some(ns)
    });

    let ldp = rd.section(&doc, "ldp", &["grid", "N", "sector"], &[]).and_then(|s| {
        let grid = rd.required(s, "grid", |v| parse_list(v, finite));
        if let Some(g) = &grid {
            rd.check(s, "grid", !g.is_empty(), || "empty grid".into());
            for m in g {
                rd.check(s, "grid", (-1.0..=1.0).contains(m), || format!("grid point {m} is outside [-1, 1]"));
            }
        }
        let ns = rd.required(s, "N", |v| parse_list(v, parse_usize));
        if let Some(ns) = &ns {
            rd.check(s, "N", strictly_increasing(ns), || "values must be strictly increasing".into());
            rd.check(s, "N", ns.len() >= 3 && ns[ns.len() - 1] >= 4 * ns[0].max(1), || {
                "rate estimation needs at least 3 positive chain lengths spanning a factor of 4".into()
            });
        }
        let sector = rd
            .value(s, "sector", |v| match v {
                "+" | "plus" => Ok(Sector::Plus),
                "-" | "minus" => Ok(Sector::Minus),
                x => Err(format!("unknown sector `{x}` (expected + or -)")),
            })
            .unwrap_or(Sector::Plus);
        Some(LdpParams {
            grid: grid?,
            n_values: ns?,
            sector,
        })
    });

    let perturbation = rd
        .section(&doc, "perturbation", &["kind", "polarization", "first", "fraction", "sites", "force"], &[])
        .and_then(|s| parse_perturbation(&mut rd, s));

    let verify_instances = rd
        .section(&doc, "verify", &["instances"], &[])
        .and_then(|s| rd.value(s, "instances", parse_usize))
        .unwrap_or(DEFAULT_VERIFY_INSTANCES);

    if kind == Some(ModelKind::GenericDense) {
        for name in ["sweep", "ldp", "perturbation"] {
            if let Some(s) = doc.section(name) {
                rd.errors.push(format!("line {}: [{name}] requires the coleman_hepp model", s.line));
            }
        }
    }

    if !rd.errors.is_empty() {
        return Err(rd.errors);
    }
    Ok(ExperimentConfig {
        seed: seed.expect("checked"),
        amplitudes: amplitudes.expect("checked"),
        observable_file,
        measurement_time,
        decay_constant,
        model: model.expect("checked"),
        sweep,
        ldp,
        perturbation,
        verify_instances,
    })
}

fn parse_chain(rd: &mut Reader, s: &Section) -> Option<ModelParams> {
    let n = rd.required(s, "N", parse_usize);
    if let Some(n) = n {
        rd.check(s, "N", n > 0, || "the chain needs at least one site".into());
    }
    let m0 = rd.required(s, "m0", finite);
    if let Some(m0) = m0 {
        rd.check(s, "m0", m0 > 0.0 && m0 <= 1.0, || format!("polarization {m0} is not in (0, 1]"));
    }
    let theta = rd.required(s, "theta", finite);
    if let Some(th) = theta {
        rd.check(s, "theta", th > 0.0 && th < TAU, || format!("rotation angle {th} is not in (0, 2pi)"));
    }
    let energies = rd
        .value(s, "energies", |v| {
            let e = parse_list(v, finite)?;
            match e.as_slice() {
                [a, b] => Ok((*a, *b)),
                _ => Err(format!("expected 2 sector energies, got {}", e.len())),
            }
        })
        .unwrap_or((0.0, 0.0));
    let t = rd.value(s, "t", finite).unwrap_or(1.0);
    rd.check(s, "t", t > 0.0, || format!("traversal time {t} must be positive"));
    let mut overrides = Vec::new();
    let mut sites = BTreeSet::new();
    for e in s.all("override") {
        if let Some((k, o)) = rd.convert(&s.name, e, parse_override) {
            if !sites.insert(k) {
                rd.errors.push(format!("line {}: site {k} is overridden twice", e.line));
            }
            if n.is_some_and(|n| k >= n) {
                rd.errors.push(format!("line {}: override for site {k} on a chain of {}", e.line, n.unwrap()));
            }
            overrides.push((k, o));
        }
    }
    overrides.sort_by_key(|o| o.0);
    Some(ModelParams::ColemanHepp(ChainParams {
        n: n?,
        m0: m0?,
        theta: theta?,
        energies,
        t,
        overrides,
    }))
}

fn parse_dense(rd: &mut Reader, s: &Section) -> Option<ModelParams> {
    let model_file = rd.required(s, "model_file", |v| Ok(v.to_string()));
    let energies = rd.required(s, "energies", |v| parse_list(v, finite));
    if let Some(e) = &energies {
        rd.check(s, "energies", !e.is_empty(), || "no energy levels given".into());
    }
    let t = rd.value(s, "t", finite).unwrap_or(1.0);
    rd.check(s, "t", t > 0.0, || format!("evolution time {t} must be positive"));
    let particles = rd.value(s, "particles", parse_usize);
    if let Some(n) = particles {
        rd.check(s, "particles", n > 0, || "particle count must be positive".into());
    }
    Some(ModelParams::GenericDense(DenseParams {
        model_file: model_file?,
        energies: energies?,
        t,
        particles,
    }))
}

fn parse_perturbation(rd: &mut Reader, s: &Section) -> Option<PerturbationParams> {
    let pol = rd.value(s, "polarization", finite);
    let kind = rd.required(s, "kind", |v| match v {
        "flip" => Ok("flip"),
        "depolarize" => Ok("depolarize"),
        "polarization" => Ok("polarization"),
        x => Err(format!("unknown kind `{x}` (expected flip, depolarize or polarization)")),
    });
    let kind = match kind {
        Some("polarization") => match pol {
            Some(m) if (-1.0..=1.0).contains(&m) => Some(PerturbationKindSpec::Polarization(m)),
            Some(m) => {
                rd.check(s, "polarization", false, || format!("polarization {m} is not in [-1, 1]"));
                None
            }
            None => {
                rd.check(s, "polarization", s.get("polarization").is_some(), || {
                    "kind = polarization needs a polarization value".into()
                });
                None
            }
        },
        Some(k) => {
            rd.check(s, "polarization", s.get("polarization").is_none(), || {
                format!("polarization is meaningless for kind = {k}")
            });
            Some(if k == "flip" {
                PerturbationKindSpec::Flip
            } else {
                PerturbationKindSpec::Depolarize
            })
        }
        None => None,
    };
    let given: Vec<&str> = ["first", "fraction", "sites"].into_iter().filter(|k| s.get(k).is_some()).collect();
    if given.len() != 1 {
        rd.errors.push(format!(
            "line {}: [perturbation] needs exactly one of first, fraction, sites (got {})",
            s.line,
            given.len()
        ));
    }
    let sites = match given.first().copied() {
        Some("first") => rd.value(s, "first", parse_usize).map(SiteSpec::First),
        Some("fraction") => {
            let f = rd.value(s, "fraction", finite);
            if let Some(f) = f {
                rd.check(s, "fraction", (0.0..=1.0).contains(&f), || format!("fraction {f} is not in [0, 1]"));
            }
            f.map(SiteSpec::Fraction)
        }
        Some(_) => rd.value(s, "sites", |v| parse_list(v, parse_usize)).map(|mut v| {
            v.sort_unstable();
            v.dedup();
            SiteSpec::Sites(v)
        }),
        None => None,
    };
    let force = rd.value(s, "force", parse_bool).unwrap_or(false);
    Some(PerturbationParams {
        kind: kind?,
        sites: sites?,
        force,
    })
}
