//! Explicit matrices for dense models: `[K]`, `[V0]`.., `[Omega]` and `[cells]`
//! sections holding `row = ...` and `cell = ...` lines, and `[A]` for observables.

use num_complex::Complex64;

use crate::linalg::CMat;
use crate::model::{Apparatus, CellProjector, ObservableS, PhaseCellPartition};

use super::text::{fmt_complex, fmt_list, parse_complex, parse_list, parse_usize, Document, Section};

fn read_matrix(s: &Section, errors: &mut Vec<String>) -> Option<CMat> {
    let mut rows = Vec::new();
    for e in &s.entries {
        if e.key != "row" {
            errors.push(format!("line {}: unknown key `{}` in [{}]", e.line, e.key, s.name));
            continue;
        }
        match parse_list(&e.value, parse_complex) {
            Ok(r) => rows.push((e.line, r)),
            Err(msg) => errors.push(format!("line {}: [{}] row: {msg}", e.line, s.name)),
        }
    }
    let dim = rows.len();
    if dim == 0 {
        errors.push(format!("line {}: [{}] has no rows", s.line, s.name));
        return None;
    }
    let mut ok = true;
    for (line, r) in &rows {
        if r.len() != dim {
            errors.push(format!("line {line}: [{}] row has {} entries, expected {dim}", s.name, r.len()));
            ok = false;
        }
    }
    ok.then(|| CMat::from_fn(dim, dim, |i, j| rows[i].1[j]))
}

fn write_matrix(doc: &mut Document, name: &str, m: &CMat) {
    let mut s = Section::new(name);
    for i in 0..m.nrows() {
        let row: Vec<Complex64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
        s.push("row", fmt_list(&row, |z| fmt_complex(*z)));
    }
    doc.sections.push(s);
}

/// `K`, the couplings `V_r`, `Ω` and basis-index cells read from a model file.
#[derive(Debug, Clone)]
pub struct DenseModelFile {
    pub free_hamiltonian: CMat,
    pub couplings: Vec<CMat>,
    pub initial_state: CMat,
    pub cells: Vec<Vec<usize>>,
}

impl DenseModelFile {
    pub fn parse(text: &str, sectors: usize) -> Result<Self, Vec<String>> {
        let doc = Document::parse(text, None)?;
        let mut errors = Vec::new();
        let coupling_names: Vec<String> = (0..sectors).map(|r| format!("V{r}")).collect();
        for s in &doc.sections {
            let known = s.name == "K" || s.name == "Omega" || s.name == "cells" || coupling_names.contains(&s.name);
            if !known {
                errors.push(format!("line {}: unexpected section [{}]", s.line, s.name));
            }
        }
        let matrix = |name: &str, errors: &mut Vec<String>| match doc.section(name) {
            Some(s) => read_matrix(s, errors),
            None => {
                errors.push(format!("missing section [{name}]"));
                None
            }
        };
        let k = matrix("K", &mut errors);
        let vs: Vec<Option<CMat>> = coupling_names.iter().map(|n| matrix(n, &mut errors)).collect();
        let omega = matrix("Omega", &mut errors);
        let mut cells = Vec::new();
        match doc.section("cells") {
            None => errors.push("missing section [cells]".into()),
            Some(s) => {
                for e in &s.entries {
                    if e.key != "cell" {
                        errors.push(format!("line {}: unknown key `{}` in [cells]", e.line, e.key));
                        continue;
                    }
                    match parse_list(&e.value, parse_usize) {
                        Ok(c) => cells.push(c),
                        Err(msg) => errors.push(format!("line {}: [cells] cell: {msg}", e.line)),
                    }
                }
            }
        }
        if let Some(k) = &k {
            let dim = k.nrows();
            for (name, m) in coupling_names.iter().zip(&vs).chain([(&"Omega".to_string(), &omega)]) {
                if let Some(m) = m {
                    if m.nrows() != dim {
                        errors.push(format!("[{name}] is {0}x{0} but [K] is {dim}x{dim}", m.nrows()));
                    }
                }
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(DenseModelFile {
            free_hamiltonian: k.expect("checked"),
            couplings: vs.into_iter().map(|v| v.expect("checked")).collect(),
            initial_state: omega.expect("checked"),
            cells,
        })
    }

    pub fn to_text(&self) -> String {
        let mut doc = Document::default();
        write_matrix(&mut doc, "K", &self.free_hamiltonian);
        for (r, v) in self.couplings.iter().enumerate() {
            write_matrix(&mut doc, &format!("V{r}"), v);
        }
        write_matrix(&mut doc, "Omega", &self.initial_state);
        let mut s = Section::new("cells");
        for c in &self.cells {
            s.push("cell", fmt_list(c, |i| i.to_string()));
        }
        doc.sections.push(s);
        doc.to_text()
    }

    pub fn apparatus(&self) -> crate::Result<Apparatus> {
        let dim = self.free_hamiltonian.nrows();
        let cells = PhaseCellPartition::new(
            dim,
            self.cells.iter().cloned().map(CellProjector::BasisIndices).collect(),
        )?;
        Apparatus::new(
            self.free_hamiltonian.clone(),
            self.couplings.clone(),
            self.initial_state.clone(),
            cells,
        )
    }
}

/// Reads the `[A]` section of an observable file.
pub fn parse_observable(text: &str) -> Result<ObservableS, Vec<String>> {
    let doc = Document::parse(text, None)?;
    let mut errors = Vec::new();
    for s in &doc.sections {
        if s.name != "A" {
            errors.push(format!("line {}: unexpected section [{}]", s.line, s.name));
        }
    }
    let m = match doc.section("A") {
        Some(s) => read_matrix(s, &mut errors),
        None => {
            errors.push("missing section [A]".into());
            None
        }
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    ObservableS::new(m.expect("checked")).map_err(|e| vec![format!("[A]: {e}")])
}

pub fn observable_to_text(a: &ObservableS) -> String {
    let mut doc = Document::default();
    write_matrix(&mut doc, "A", &a.matrix().to_owned());
    doc.to_text()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn model_file_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = crate::model::random::random_instance(&mut rng, 2, 4).unwrap();
        let app = &inst.apparatus;
        let file = DenseModelFile {
            free_hamiltonian: app.free_hamiltonian().to_owned(),
            couplings: (0..2).map(|r| app.coupling(r).to_owned()).collect(),
            initial_state: app.initial_state().to_owned(),
            cells: vec![vec![0, 3], vec![1, 2]],
        };
        let back = DenseModelFile::parse(&file.to_text(), 2).unwrap();
        assert_eq!(back.free_hamiltonian, file.free_hamiltonian);
        assert_eq!(back.couplings, file.couplings);
        assert_eq!(back.initial_state, file.initial_state);
        assert_eq!(back.cells, file.cells);
        back.apparatus().unwrap();
    }

    #[test]
    fn model_file_errors_are_collected() {
        let text = "[K]\nrow = 0, 0\nrow = 0\n[V0]\nrow = 1\n[W]\n[cells]\ncell = 0\ncell = x\n";
        let errs = DenseModelFile::parse(text, 2).unwrap_err();
        // short row, unknown section, missing V1, missing Omega, bad cell
        assert_eq!(errs.len(), 5, "{errs:?}");
    }

    #[test]
    fn observable_must_be_hermitian() {
        assert!(parse_observable("[A]\nrow = 1, 0.5i\nrow = -0.5i, 2\n").is_ok());
        assert!(parse_observable("[A]\nrow = 1, 0.5i\nrow = 0.5i, 2\n").is_err());
        let a = parse_observable("[A]\nrow = 1, 0.5+0.25i\nrow = 0.5-0.25i, -3\n").unwrap();
        let back = parse_observable(&observable_to_text(&a)).unwrap();
        assert_eq!(back.matrix(), a.matrix());
    }
}
