//! Line-oriented `key = value` documents with `[section]` headers, and the
//! number formats shared by configs, matrix files and reports.

use std::f64::consts::PI;
use std::fmt::Write;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Section {
            name: name.to_string(),
            line: 0,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push(Entry {
            key: key.to_string(),
            value: value.into(),
            line: 0,
        });
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

/// Ordered sections; text before the first header is not allowed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub header: Option<String>,
    pub sections: Vec<Section>,
}

impl Document {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Parses `text`. With `header`, the first non-blank line must equal it.
    pub fn parse(text: &str, header: Option<&str>) -> Result<Document, Vec<String>> {
        let mut errors = Vec::new();
        let mut doc = Document::default();
        let mut expect_header = header;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = expect_header.take() {
                if line != h {
                    errors.push(format!("line {line_no}: expected header `{h}`, found `{line}`"));
                }
                doc.header = Some(line.to_string());
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                match name.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() => {
                        let name = name.trim();
                        if doc.section(name).is_some() {
                            errors.push(format!("line {line_no}: section [{name}] appears twice"));
                        }
                        doc.sections.push(Section {
                            name: name.to_string(),
                            line: line_no,
                            entries: Vec::new(),
                        });
                    }
                    _ => errors.push(format!("line {line_no}: malformed section header `{line}`")),
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {line_no}: expected `key = value`, found `{line}`"));
                continue;
            };
            let key = key.trim();
            if key.is_empty() {
                errors.push(format!("line {line_no}: empty key"));
                continue;
            }
            match doc.sections.last_mut() {
                Some(s) => s.entries.push(Entry {
                    key: key.to_string(),
                    value: value.trim().to_string(),
                    line: line_no,
                }),
                None => errors.push(format!("line {line_no}: `{key}` appears before any section")),
            }
        }
        if let Some(h) = expect_header {
            errors.push(format!("missing header `{h}`"));
        }
        if errors.is_empty() {
            Ok(doc)
        } else {
            Err(errors)
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.header {
            let _ = writeln!(out, "{h}");
        }
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 || self.header.is_some() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", s.name);
            for e in &s.entries {
                let _ = writeln!(out, "{} = {}", e.key, e.value);
            }
        }
        out
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        fmt_f64(z.re)
    } else {
        format!("{}{}{}i", fmt_f64(z.re), if z.im.is_sign_negative() { "" } else { "+" }, fmt_f64(z.im))
    }
}

pub fn fmt_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

/// Reals, including `inf`, `nan` and multiples of `pi` such as `pi`, `-pi/2`, `3*pi/4`, `0.5pi`.
pub fn parse_f64(s: &str) -> Result<f64, String> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        "nan" => return Ok(f64::NAN),
        _ => {}
    }
    if let Some(pos) = t.find("pi") {
        let (head, tail) = (t[..pos].trim(), t[pos + 2..].trim());
        let head = head.strip_suffix('*').unwrap_or(head).trim();
        let factor = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().map_err(|_| format!("invalid number `{s}`"))?,
        };
        let divisor = if tail.is_empty() {
            1.0
        } else {
            let d = tail.strip_prefix('/').ok_or_else(|| format!("invalid number `{s}`"))?;
            d.trim().parse::<f64>().map_err(|_| format!("invalid number `{s}`"))?
        };
        return Ok(factor * PI / divisor);
    }
    t.parse::<f64>().map_err(|_| format!("invalid number `{s}`"))
}

/// `a`, `bi`, `a+bi`, `a-bi` (also with `j` for the imaginary unit).
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return parse_f64(t).map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (parse_f64(&body[..i])?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im.trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => parse_f64(x)?,
    };
    Ok(Complex64::new(re, im))
}

pub fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| f(x.trim())).collect()
}

pub fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim().parse::<usize>().map_err(|_| format!("invalid non-negative integer `{s}`"))
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        x => Err(format!("invalid boolean `{x}`")),
    }
}
