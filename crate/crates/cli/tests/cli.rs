//! The `hyperadams` binary: exit codes, artifacts and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use hyperadams_cli::report::strip_timestamp;
use hyperadams_cli::{ExperimentConfig, ExperimentReport};

fn hyperadams(args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hyperadams"));
    cmd.args(args).env_remove("HYPERADAMS_THREADS");
    if let Some(t) = threads_env {
        cmd.env("HYPERADAMS_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|rd| rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

#[test]
fn run_writes_csv_and_json_and_prints_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.cfg", "experiment = constants\nk = 1..2\n");
    let o = hyperadams(&["run", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&out), ["constants.csv", "constants.json"]);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.ends_with("constants.csv")));
    let csv = std::fs::read_to_string(out.join("constants.csv")).unwrap();
    assert!(csv.starts_with("# generated "));
    assert!(strip_timestamp(&csv).starts_with("k,n,beta0,"));
    assert_eq!(strip_timestamp(&csv).lines().count(), 1 + 18);
}

#[test]
fn config_echo_reparses_to_the_same_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let text = "# two translations\nexperiment = isometry-2d\nk = 1\ntranslations = 2\nresolution = 8\nseed = 5\n";
    let cfg = write_config(tmp.path(), "iso.cfg", text);
    let o = hyperadams(&["run", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json = std::fs::read_to_string(out.join("isometry-2d.json")).unwrap();
    let report: ExperimentReport = serde_json::from_str(&json).unwrap();
    let echoed: String = report.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    let original = ExperimentConfig::parse(text).unwrap();
    assert_eq!(ExperimentConfig::parse(&echoed).unwrap(), original);
    assert_eq!(report.experiment, "isometry-2d");
    assert_eq!(report.rows.len(), 4);
}

#[test]
fn invalid_configs_exit_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("missing-k.cfg", "experiment = constants\n"),
        ("unknown-key.cfg", "experiment = constants\nk = 1\ncolour = blue\n"),
        ("k-range.cfg", "experiment = solve-pde\nk = 4\n"),
        ("bad-delta.cfg", "experiment = inequalities\nk = 1\ndelta = 1.5\n"),
    ];
    for (name, text) in cases {
        let out = tmp.path().join(name.replace(".cfg", ""));
        let cfg = write_config(tmp.path(), name, text);
        let o = hyperadams(&["run", &cfg, "--out", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(files_in(&out).is_empty(), "{name} wrote files");
    }
    let o = hyperadams(&["run", tmp.path().join("absent.cfg").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_threads_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "experiment = constants\nk = 1\n");
    let out = tmp.path().join("out");
    let o = hyperadams(&["run", &cfg, "--out", out.to_str().unwrap(), "--threads", "0"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = hyperadams(&["run", &cfg, "--out", out.to_str().unwrap()], Some("many"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_refinable_experiment_has_no_study() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.cfg", "experiment = blowup\nk = 1\n");
    let o = hyperadams(&["converge", &cfg, "--out", tmp.path().join("out").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missed_tolerance_exits_4_after_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let text = "experiment = solve-pde\nk = 2\nq2 = gaussian:-2:1.5\nmax_iter = 1\n";
    let cfg = write_config(tmp.path(), "p.cfg", text);
    let o = hyperadams(&["run", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&out), ["solve-pde.csv", "solve-pde.json"]);
    let report: ExperimentReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("solve-pde.json")).unwrap()).unwrap();
    assert_eq!(report.summary["k2"]["converged"], serde_json::json!(false));
}

#[test]
fn convergence_study_writes_its_own_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.cfg", "experiment = conformal-identity\nk = 1\nn_nodes = 60\nr_max = 2\n");
    let o = hyperadams(&["converge", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&out), ["conformal-identity-convergence.csv", "conformal-identity-convergence.json"]);
    let csv = std::fs::read_to_string(out.join("conformal-identity-convergence.csv")).unwrap();
    assert!(strip_timestamp(&csv).starts_with("series,level,n_nodes,value,error,order,status"));
}

#[test]
fn csv_bodies_do_not_depend_on_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = solve-pde\nk = 1, 2\n";
    let cfg = write_config(tmp.path(), "p.cfg", text);
    let bodies: Vec<String> = [("1", "a"), ("3", "b"), ("3", "c")]
        .iter()
        .map(|(threads, sub)| {
            let out = tmp.path().join(sub);
            let o = hyperadams(&["run", &cfg, "--out", out.to_str().unwrap()], Some(threads));
            assert!(o.status.success());
            strip_timestamp(&std::fs::read_to_string(out.join("solve-pde.csv")).unwrap()).to_string()
        })
        .collect();
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);
}
