//! Command-line contract: outputs, formats and exit codes.

mod common;

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pointer_cell_sim::harness::matrix_file::DenseModelFile;
use pointer_cell_sim::harness::{parse_config, RunReport};
use pointer_cell_sim::model::random::random_instance;

use common::{cli, dir_contents, CHAIN_FIXTURE, SUBCOMMANDS};

fn fixture(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_report_carries_the_chain_functionals() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture(tmp.path(), "chain.ini", CHAIN_FIXTURE);
    let out = tmp.path().join("out");
    let o = cli(&["run", "--oracle"], &config, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out, "report.txt");
    let report = RunReport::parse(&text).unwrap();
    assert_eq!(report.to_text(), text);
    assert!((report.weights[0] - 0.53408).abs() < 1e-12 && (report.weights[1] - 0.46592).abs() < 1e-12);
    let verdicts = report.verdicts.as_ref().unwrap();
    assert_eq!(verdicts.pointer_map, vec![1, 0]);
    assert!(!verdicts.exact_holds);
    assert!(report.oracle_discrepancy.unwrap() < 1e-10);
    assert!(report.properties.normalization < 1e-12);
    assert_eq!(report.provenance.config_sha256.len(), 64);
}

#[test]
fn outputs_do_not_depend_on_the_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture(tmp.path(), "chain.ini", CHAIN_FIXTURE);
    for sub in SUBCOMMANDS {
        let one = tmp.path().join(format!("{sub}-1"));
        let many = tmp.path().join(format!("{sub}-4"));
        assert_eq!(cli(&[sub, "--workers", "1"], &config, &one).status.code(), Some(0));
        assert_eq!(cli(&[sub, "--workers", "4"], &config, &many).status.code(), Some(0));
        assert_eq!(dir_contents(&one), dir_contents(&many), "{sub}");
    }
}

#[test]
fn csv_headers_are_fixed() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture(tmp.path(), "chain.ini", CHAIN_FIXTURE);
    let out = tmp.path().join("out");
    for sub in ["sweep", "ldp", "perturb"] {
        assert_eq!(cli(&[sub], &config, &out).status.code(), Some(0));
    }
    let first = |name: &str| read(&out, name).lines().next().unwrap().to_string();
    assert_eq!(first("sweep.csv"), "N,eps_max,log_eps_max,w_plus,w_minus,offdiag_max,status");
    assert_eq!(first("ldp.csv"), "m,N,empirical_rate,analytic_rate,residual,status");
    assert_eq!(first("perturb.csv"), "N,support,log_eps_baseline,log_eps_perturbed");
    assert_eq!(read(&out, "sweep.csv").lines().count(), 5);
    assert_eq!(read(&out, "ldp.csv").lines().count(), 21);
}

#[test]
fn single_point_sweep_refuses_the_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture(tmp.path(), "one.ini", &CHAIN_FIXTURE.replace("N = 50, 100, 200, 400", "N = 100"));
    let out = tmp.path().join("out");
    assert_eq!(cli(&["sweep"], &config, &out).status.code(), Some(0));
    let csv = read(&out, "sweep.csv");
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",ok"));
    let fit = read(&out, "sweep_fit.txt");
    assert!(fit.lines().any(|l| l.starts_with("status = refused:")), "{fit}");
}

#[test]
fn underflowing_errors_are_flagged_in_the_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture(tmp.path(), "long.ini", &CHAIN_FIXTURE.replace("N = 50, 100, 200, 400", "N = 1000, 2000, 4000, 8000"));
    let out = tmp.path().join("out");
    assert_eq!(cli(&["sweep"], &config, &out).status.code(), Some(0));
    let csv = read(&out, "sweep.csv");
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("8000,") && last.ends_with(",log_only"), "{last}");
    assert!(read(&out, "sweep_fit.txt").contains("status = ok"));
}

#[test]
fn malformed_config_reports_every_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = CHAIN_FIXTURE
        .replace("m0 = 0.6", "m0 = 1.5")
        .replace("amplitudes = 0.6, 0.8", "amplitudes = 0.6, 0.9")
        .replace("[verify]", "[verify]\ncolour = blue");
    let config = fixture(tmp.path(), "bad.ini", &text);
    let out = tmp.path().join("out");
    let o = cli(&["run"], &config, &out);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("experiment.amplitudes"), "{stderr}");
    assert!(stderr.contains("m0") && stderr.contains("colour"), "{stderr}");
    assert!(!out.exists());
    assert_eq!(parse_config(&text).unwrap_err().len(), 3);
}

#[test]
fn missing_config_is_an_io_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cli(&["run"], &tmp.path().join("absent.ini"), &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_beyond_the_dense_cap_is_a_capacity_error() {
    let tmp = tempfile::tempdir().unwrap();
    let large = fixture(tmp.path(), "large.ini", &CHAIN_FIXTURE.replace("N = 4", "N = 13"));
    assert_eq!(cli(&["run", "--oracle"], &large, &tmp.path().join("a")).status.code(), Some(3));
    assert_eq!(cli(&["run"], &large, &tmp.path().join("b")).status.code(), Some(0));
    let config = fixture(tmp.path(), "chain.ini", CHAIN_FIXTURE);
    assert_eq!(cli(&["sweep", "--oracle"], &config, &tmp.path().join("c")).status.code(), Some(3));

    let small = fixture(tmp.path(), "small.ini", &CHAIN_FIXTURE.replace("N = 50, 100, 200, 400", "N = 2, 4, 6, 8"));
    let out = tmp.path().join("d");
    assert_eq!(cli(&["sweep", "--oracle"], &small, &out).status.code(), Some(0));
    assert!(read(&out, "sweep_fit.txt").contains("[oracle]"));
}

#[test]
fn extensive_perturbation_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let text = CHAIN_FIXTURE.replace("kind = flip\nfirst = 2", "kind = depolarize\nfraction = 0.5");
    let config = fixture(tmp.path(), "wide.ini", &text);
    assert_eq!(cli(&["perturb"], &config, &tmp.path().join("a")).status.code(), Some(2));

    let forced = fixture(tmp.path(), "forced.ini", &text.replace("fraction = 0.5", "fraction = 0.5\nforce = true"));
    let out = tmp.path().join("b");
    assert_eq!(cli(&["perturb"], &forced, &out).status.code(), Some(0));
    let report = read(&out, "perturb_report.txt");
    assert!(report.contains("passed = false"), "{report}");
}

#[test]
fn generic_dense_model_runs_against_the_composite_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let inst = random_instance(&mut rng, 3, 6).unwrap();
    let app = &inst.apparatus;
    let cells = (0..3).map(|a| match app.cells().projector(a) {
        pointer_cell_sim::model::CellProjector::BasisIndices(ix) => ix.clone(),
        other => panic!("unexpected projector {other:?}"),
    });
    let model = DenseModelFile {
        free_hamiltonian: app.free_hamiltonian().to_owned(),
        couplings: (0..3).map(|r| app.coupling(r).to_owned()).collect(),
        initial_state: app.initial_state().to_owned(),
        cells: cells.collect(),
    };
    fixture(tmp.path(), "model.txt", &model.to_text());
    fixture(tmp.path(), "a.txt", "[A]\nrow = 1, 0.5i, 0\nrow = -0.5i, 0, 0.25\nrow = 0, 0.25, -1\n");
    let config = fixture(
        tmp.path(),
        "dense.ini",
        "[experiment]\nmodel = generic_dense\nseed = 3\namplitudes = 0.6, 0.48i, 0.64\nobservable = a.txt\n\n\
         [generic_dense]\nmodel_file = model.txt\nenergies = -0.5, 0.1, 0.7\nt = 1.3\n",
    );
    let out = tmp.path().join("out");
    let o = cli(&["run", "--oracle"], &config, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out, "report.txt");
    let report = RunReport::parse(&text).unwrap();
    assert_eq!(report.to_text(), text);
    assert_eq!(report.sectors, 3);
    // A random apparatus need not single out one cell per sector.
    assert!(report.verdicts.as_ref().is_err_and(|r| r.contains("sector")), "{:?}", report.verdicts);
    assert!(report.oracle_discrepancy.unwrap() < 1e-9);
    assert!((report.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(report.properties.cauchy_schwarz < 1e-12);

    let before = read(&out, "report.txt");
    fixture(tmp.path(), "a.txt", "[A]\nrow = 2, 0, 0\nrow = 0, 0, 0\nrow = 0, 0, -1\n");
    assert_eq!(cli(&["run"], &config, &out).status.code(), Some(0));
    let after = RunReport::parse(&read(&out, "report.txt")).unwrap();
    assert_ne!(after.provenance.config_sha256, RunReport::parse(&before).unwrap().provenance.config_sha256);
}

#[test]
fn verify_writes_a_passing_report() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture(tmp.path(), "chain.ini", CHAIN_FIXTURE);
    let out = tmp.path().join("out");
    assert_eq!(cli(&["verify"], &config, &out).status.code(), Some(0));
    let report = read(&out, "verify_report.txt");
    assert!(report.contains("instances = 40"), "{report}");
    assert!(report.contains("passed = true"), "{report}");
}
