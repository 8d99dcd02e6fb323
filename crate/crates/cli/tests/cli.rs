use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kmsbound::RunOutput;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kmsbound"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str], file: &Path) -> Output {
    bin().args(args).arg(file).output().unwrap()
}

fn structured(file: &Path) -> (RunOutput, i32) {
    let out = run(&["run", "--format", "structured"], file);
    (serde_json::from_slice(&out.stdout).unwrap(), out.status.code().unwrap())
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn gibbs_scenario_passes() {
    let (out, code) = structured(&scenario("gibbs_qubit.json"));
    assert_eq!(code, 0);
    assert_eq!(out.schema_version, kmsbound::SCHEMA_VERSION);
    assert_eq!(out.reports.len(), 11);
    assert!(out.reports.iter().all(|r| r.passed()));
}

#[test]
fn text_output_lists_every_check() {
    let out = run(&["run"], &scenario("gibbs_qubit.json"));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[PASS    ] kms"));
    assert!(text.contains("[PASS    ] psi_decomposition"));
    assert!(text.ends_with("overall: pass\n"));
}

#[test]
fn ness_scenario_exits_one() {
    let (out, code) = structured(&scenario("ness_two_reservoirs.json"));
    assert_eq!(code, 1);
    let kms: Vec<_> = out.reports.iter().filter(|r| r.check == "kms").collect();
    assert_eq!(kms.len(), 2);
    assert!(kms.iter().all(|r| r.value("residual").unwrap() > 1e-2));
    let bm = out.reports.iter().find(|r| r.check == "beta_max").unwrap();
    assert_eq!(bm.value("beta_max"), Some(0.0));
}

#[test]
fn perturbed_scenario_is_not_kms_for_bare_dynamics() {
    let (out, code) = structured(&scenario("perturbed_gibbs.json"));
    assert_eq!(code, 1);
    let kms = out.reports.iter().find(|r| r.check == "kms").unwrap();
    assert!(kms.value("residual").unwrap() > 1e-3);
    let hb = out.reports.iter().find(|r| r.check == "holomorphy_bound").unwrap();
    assert!(hb.value("constant").unwrap().is_finite());
}

#[test]
fn structured_output_round_trips() {
    let out = run(&["run", "--format", "structured", "--full-witness"], &scenario("ness_two_reservoirs.json"));
    let parsed: RunOutput = serde_json::from_slice(&out.stdout).unwrap();
    let again = kmsbound::emit_report(&parsed, kmsbound::Format::Structured, true);
    assert_eq!(again.as_bytes(), out.stdout.as_slice());
}

#[test]
fn witness_data_only_with_flag() {
    let f = scenario("inverted_population.json");
    let plain = run(&["run", "--format", "structured"], &f);
    let full = run(&["run", "--format", "structured", "--full-witness"], &f);
    let count = |o: &Output| String::from_utf8_lossy(&o.stdout).matches("\"data\"").count();
    assert_eq!(count(&plain), 0);
    assert!(count(&full) > 0);
    assert_eq!(plain.status.code(), Some(1));
}

#[test]
fn inverted_population_is_not_passive() {
    let (out, _) = structured(&scenario("inverted_population.json"));
    let energy = out.reports.iter().find(|r| r.check == "passivity_energy").unwrap();
    let subspace = out.reports.iter().find(|r| r.check == "passivity_subspace").unwrap();
    assert!(!energy.passed());
    assert!(subspace.passed());
}

#[test]
fn runs_are_byte_identical_and_seed_matters() {
    let f = scenario("gibbs_qubit.json");
    let a = run(&["run", "--format", "structured", "--seed", "5"], &f).stdout;
    let b = run(&["run", "--format", "structured", "--seed", "5"], &f).stdout;
    let c = run(&["run", "--format", "structured", "--seed", "6"], &f).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = bin()
        .args(["run", "--format", "structured", "--out"])
        .arg(&target)
        .arg(scenario("pure_state.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let parsed: RunOutput = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(parsed.scenario, "pure_state");
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for entry in std::fs::read_dir(scenario("")).unwrap() {
        let p = entry.unwrap().path();
        let out = run(&["validate"], &p);
        assert_eq!(out.status.code(), Some(0), "{}", p.display());
    }
}

#[test]
fn validation_errors_exit_two_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad_check = write_temp(
        &dir,
        "a.json",
        r#"{"name": "x", "state": {"tracial": {"n": 2}}, "hamiltonian": {"diagonal": [0, 1]}, "checks": ["kms", "nope"]}"#,
    );
    let out = run(&["validate"], &bad_check);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks[1]"));

    let mismatch = write_temp(
        &dir,
        "b.json",
        r#"{"name": "x", "state": {"tracial": {"n": 2}}, "hamiltonian": {"diagonal": [0, 1, 2]}, "checks": ["kms"]}"#,
    );
    assert_eq!(run(&["run"], &mismatch).status.code(), Some(2));

    let garbage = write_temp(&dir, "c.json", "{ not json");
    assert_eq!(run(&["run"], &garbage).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    let out = run(&["run"], &missing);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}

#[test]
fn non_commuting_perturbation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(
        &dir,
        "p.json",
        r#"{"name": "p", "state": {"perturbed": {
              "hamiltonian": {"diagonal": [0, 1]},
              "perturbation": {"explicit": {"matrix": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]}},
              "beta": 1.0}},
            "checks": ["kms"]}"#,
    );
    let out = run(&["validate"], &f);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("perturbation"));
}

#[test]
fn beta_sweep_crosses_one_at_natural_temperature() {
    let out = bin()
        .args(["sweep", "--param", "beta", "--grid", "0.1:2.0:20"])
        .arg(scenario("gibbs_beta_sweep.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 20);
    assert_eq!(header[0], "beta");
    let betas = column(&header, &rows, "beta");
    let norms = column(&header, &rows, "beta_bounded.norm");
    // β₀ = 1 for this scenario
    for (b, n) in betas.iter().zip(&norms) {
        if *b <= 1.0 + 1e-12 {
            assert!((n - 1.0).abs() < 1e-10, "beta {b}: {n}");
        } else {
            assert!(*n > 1.0 + 1e-6, "beta {b}: {n}");
        }
    }
    assert!(norms.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn n_sweep_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("n.csv");
    let out = bin()
        .args(["sweep", "--param", "N", "--grid", "1000,10000,100000,1000000", "--out"])
        .arg(&csv)
        .arg(scenario("remark_log_sqrt.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv_rows(&std::fs::read_to_string(csv).unwrap());
    assert_eq!(rows.len(), 4);
    let norms = column(&header, &rows, "remark.norm");
    assert!(norms.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_is_deterministic_and_rejects_bad_grids() {
    let f = scenario("gibbs_beta_sweep.json");
    let go = |grid: &str| bin().args(["sweep", "--param", "beta", "--grid", grid]).arg(&f).output().unwrap();
    assert_eq!(go("0.2:1.5:7").stdout, go("0.2:1.5:7").stdout);
    assert_eq!(go("0.2:1.5").status.code(), Some(2));
    assert_eq!(go("a,b").status.code(), Some(2));
}
