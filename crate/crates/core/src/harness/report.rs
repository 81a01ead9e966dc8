//! The structured text report of a single run.

use num_complex::Complex64;

use crate::logspace::LogValue;
use crate::model::FPropertyReport;

use super::text::{
    fmt_complex, fmt_f64, fmt_list, parse_bool, parse_complex, parse_f64, parse_list, parse_usize, Document, Section,
};

pub const REPORT_HEADER: &str = "pointer-cell-sim report v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_sha256: String,
    pub backend: String,
    pub version: String,
}

/// One `F_{r,s;α}` entry: the value as printed and its log-space form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FEntry {
    pub r: usize,
    pub s: usize,
    pub alpha: usize,
    pub value: Complex64,
    pub log: LogValue,
}

impl FEntry {
    /// Nonzero in log space but zero once converted to `f64`.
    pub fn underflowed(&self) -> bool {
        !self.log.is_zero() && self.value == Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdicts {
    pub pointer_map: Vec<usize>,
    pub pointer_confidence: Vec<f64>,
    pub exact_holds: bool,
    pub exact_residual: f64,
    pub ln_errors: Vec<f64>,
    /// `-ln max_r ε_r / N`, when a particle count is known.
    pub implied_constant: Option<f64>,
    /// `(c, satisfied)` for the configured decay constant.
    pub weakened: Option<(f64, bool)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub provenance: Provenance,
    pub model: String,
    pub particles: Option<usize>,
    pub t: f64,
    pub amplitudes: Vec<Complex64>,
    pub sectors: usize,
    pub f_entries: Vec<FEntry>,
    pub weights: Vec<f64>,
    pub expectation: f64,
    /// `E(A | K_α)`; `None` for a null macrostate.
    pub conditional: Vec<Option<f64>>,
    /// `Err` carries the reason no cell-to-sector correspondence exists.
    pub verdicts: Result<Verdicts, String>,
    pub properties: FPropertyReport,
    /// Largest entrywise gap between the dense and factorized tensors.
    pub oracle_discrepancy: Option<f64>,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), fmt_f64)
}

fn parse_opt(s: &str) -> Result<Option<f64>, String> {
    if s.trim() == "undefined" {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut doc = Document {
            header: Some(REPORT_HEADER.into()),
            sections: Vec::new(),
        };
        let mut s = Section::new("provenance");
        s.push("config_sha256", self.provenance.config_sha256.clone());
        s.push("backend", self.provenance.backend.clone());
        s.push("version", self.provenance.version.clone());
        doc.sections.push(s);

        let mut s = Section::new("model");
        s.push("model", self.model.clone());
        if let Some(n) = self.particles {
            s.push("N", n.to_string());
        }
        s.push("t", fmt_f64(self.t));
        s.push("sectors", self.sectors.to_string());
        s.push("amplitudes", fmt_list(&self.amplitudes, |z| fmt_complex(*z)));
        doc.sections.push(s);

        let mut s = Section::new("f_tensor");
        for e in &self.f_entries {
            let flag = if e.underflowed() { "log_only" } else { "ok" };
            s.push(
                "entry",
                format!(
                    "{} {} {} {} {} {} {flag}",
                    e.r,
                    e.s,
                    e.alpha,
                    fmt_complex(e.value),
                    fmt_f64(e.log.ln_abs),
                    fmt_f64(e.log.phase)
                ),
            );
        }
        doc.sections.push(s);

        let mut s = Section::new("functionals");
        s.push("weights", fmt_list(&self.weights, |x| fmt_f64(*x)));
        s.push("weight_sum", fmt_f64(self.weights.iter().sum()));
        s.push("expectation", fmt_f64(self.expectation));
        s.push("conditional", fmt_list(&self.conditional, |x| fmt_opt(*x)));
        doc.sections.push(s);

        let mut s = Section::new("verdicts");
        match &self.verdicts {
            Ok(v) => {
                s.push("pointer_map", fmt_list(&v.pointer_map, |x| x.to_string()));
                s.push("pointer_confidence", fmt_list(&v.pointer_confidence, |x| fmt_f64(*x)));
                s.push("exact_holds", v.exact_holds.to_string());
                s.push("exact_residual", fmt_f64(v.exact_residual));
                s.push("ln_pointer_errors", fmt_list(&v.ln_errors, |x| fmt_f64(*x)));
                s.push("implied_decay_constant", fmt_opt(v.implied_constant));
                if let Some((c, ok)) = v.weakened {
                    s.push("decay_constant", fmt_f64(c));
                    s.push("weakened_holds", ok.to_string());
                }
            }
            Err(reason) => {
                s.push("pointer_map", "undefined");
                s.push("reason", reason.clone());
            }
        }
        doc.sections.push(s);

        let p = &self.properties;
        let mut s = Section::new("properties");
        s.push("normalization", fmt_f64(p.normalization));
        s.push("bounds", fmt_f64(p.bounds));
        s.push("symmetry", fmt_f64(p.symmetry));
        s.push("positivity", fmt_f64(p.positivity));
        s.push("cauchy_schwarz", fmt_f64(p.cauchy_schwarz));
        s.push("passed", p.passed().to_string());
        doc.sections.push(s);

        if let Some(d) = self.oracle_discrepancy {
            let mut s = Section::new("oracle");
            s.push("max_discrepancy", fmt_f64(d));
            doc.sections.push(s);
        }
        doc.to_text()
    }

    pub fn parse(text: &str) -> Result<RunReport, Vec<String>> {
        let doc = Document::parse(text, Some(REPORT_HEADER))?;
        let mut errors = Vec::new();
        let mut get = |section: &str, key: &str| -> String {
            match doc.section(section).and_then(|s| s.get(key)) {
                Some(e) => e.value.clone(),
                None => {
                    errors.push(format!("missing {section}.{key}"));
                    String::new()
                }
            }
        };
        let raw = [
            ("provenance", "config_sha256"),
            ("provenance", "backend"),
            ("provenance", "version"),
            ("model", "model"),
            ("model", "t"),
            ("model", "sectors"),
            ("model", "amplitudes"),
            ("functionals", "weights"),
            ("functionals", "expectation"),
            ("functionals", "conditional"),
            ("properties", "normalization"),
            ("properties", "bounds"),
            ("properties", "symmetry"),
            ("properties", "positivity"),
            ("properties", "cauchy_schwarz"),
            ("verdicts", "pointer_map"),
        ]
        .map(|(s, k)| get(s, k));
        if !errors.is_empty() {
            return Err(errors);
        }
        let opt = |section: &str, key: &str| doc.section(section).and_then(|s| s.get(key)).map(|e| e.value.clone());
        let res = (|| -> Result<RunReport, String> {
            let mut f_entries = Vec::new();
            for e in doc.section("f_tensor").map(|s| s.entries.as_slice()).unwrap_or(&[]) {
                let p: Vec<&str> = e.value.split_whitespace().collect();
                if e.key != "entry" || p.len() != 7 {
                    return Err(format!("line {}: malformed tensor entry", e.line));
                }
                f_entries.push(FEntry {
                    r: parse_usize(p[0])?,
                    s: parse_usize(p[1])?,
                    alpha: parse_usize(p[2])?,
                    value: parse_complex(p[3])?,
                    log: LogValue {
                        ln_abs: parse_f64(p[4])?,
                        phase: parse_f64(p[5])?,
                    },
                });
            }
            let verdicts = if raw[15].trim() == "undefined" {
                Err(opt("verdicts", "reason").ok_or("missing verdicts.reason")?)
            } else {
                let need = |key: &str| opt("verdicts", key).ok_or(format!("missing verdicts.{key}"));
                let weakened = match (opt("verdicts", "decay_constant"), opt("verdicts", "weakened_holds")) {
                    (Some(c), Some(ok)) => Some((parse_f64(&c)?, parse_bool(&ok)?)),
                    (None, None) => None,
                    _ => return Err("decay_constant and weakened_holds must appear together".into()),
                };
                Ok(Verdicts {
                    pointer_map: parse_list(&raw[15], parse_usize)?,
                    pointer_confidence: parse_list(&need("pointer_confidence")?, parse_f64)?,
                    exact_holds: parse_bool(&need("exact_holds")?)?,
                    exact_residual: parse_f64(&need("exact_residual")?)?,
                    ln_errors: parse_list(&need("ln_pointer_errors")?, parse_f64)?,
                    implied_constant: parse_opt(&need("implied_decay_constant")?)?,
                    weakened,
                })
            };
            Ok(RunReport {
                provenance: Provenance {
                    config_sha256: raw[0].clone(),
                    backend: raw[1].clone(),
                    version: raw[2].clone(),
                },
                model: raw[3].clone(),
                particles: opt("model", "N").map(|v| parse_usize(&v)).transpose()?,
                t: parse_f64(&raw[4])?,
                sectors: parse_usize(&raw[5])?,
                amplitudes: parse_list(&raw[6], parse_complex)?,
                f_entries,
                weights: parse_list(&raw[7], parse_f64)?,
                expectation: parse_f64(&raw[8])?,
                conditional: parse_list(&raw[9], parse_opt)?,
                verdicts,
                properties: FPropertyReport {
                    normalization: parse_f64(&raw[10])?,
                    bounds: parse_f64(&raw[11])?,
                    symmetry: parse_f64(&raw[12])?,
                    positivity: parse_f64(&raw[13])?,
                    cauchy_schwarz: parse_f64(&raw[14])?,
                },
                oracle_discrepancy: opt("oracle", "max_discrepancy").map(|v| parse_f64(&v)).transpose()?,
            })
        })();
        res.map_err(|e| vec![e])
    }
}
