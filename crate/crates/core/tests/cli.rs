//! Dataset files, configuration, reports and the command-line entry point.

mod common;

use std::fs;
use std::process::Command;

use common::fixture_dir;
use gnngp::config::{parse_config, RunConfig};
use gnngp::dataset::{load_dataset, read_splits};
use gnngp::harness::{run_benchmark, run_depth_scan, run_infer, run_mc_verify};
use gnngp::report::Report;
use gnngp::Error;

const GOLDEN: &str = "tests/fixtures/tiny4_infer.golden";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnngp"))
}

fn fixture_cfg() -> RunConfig {
    RunConfig {
        dataset: Some(fixture_dir()),
        variance: true,
        ..RunConfig::default()
    }
}

fn copy_fixture(dir: &std::path::Path) {
    for f in fs::read_dir(fixture_dir()).unwrap() {
        let f = f.unwrap();
        fs::copy(f.path(), dir.join(f.file_name())).unwrap();
    }
}

#[test]
fn fixture_loads() {
    let ds = load_dataset(&fixture_dir()).unwrap();
    assert_eq!(ds.n_nodes(), 4);
    assert_eq!(ds.features.ncols(), 2);
    assert_eq!(ds.n_undirected_edges(), 3);
    assert!(ds.targets.is_classification());
}

#[test]
fn target_count_mismatch_names_both_counts() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    fs::write(dir.path().join("targets.txt"), "0\n1\n0\n").unwrap();
    let msg = load_dataset(dir.path()).unwrap_err().to_string();
    assert!(msg.contains('3') && msg.contains('4'), "{msg}");
}

#[test]
fn missing_file_is_an_input_error_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    fs::remove_file(dir.path().join("splits.json")).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("splits.json"), "{err}");
}

#[test]
fn malformed_feature_line_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    fs::write(dir.path().join("features.csv"), "1,0\n0.5,x\n0.9,0.2\n-0.3,1.1\n").unwrap();
    match load_dataset(dir.path()).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 2),
        Error::Context { source, .. } => assert!(matches!(*source, Error::Parse { line: 2, .. })),
        e => panic!("unexpected error {e:?}"),
    }
}

#[test]
fn infer_report_matches_golden_file() {
    let report = run_infer(&fixture_cfg()).unwrap().masked();
    let golden = fs::read_to_string(GOLDEN).unwrap();
    assert_eq!(report.render(), golden);
    assert_eq!(Report::parse(&golden).unwrap(), report);
}

#[test]
fn runs_are_reproducible() {
    let a = run_mc_verify(&RunConfig { width: 64, samples: 20, ..fixture_cfg() }).unwrap();
    let b = run_mc_verify(&RunConfig { width: 64, samples: 20, ..fixture_cfg() }).unwrap();
    assert_eq!(a.masked(), b.masked());
    let lowrank = RunConfig {
        path: gnngp::config::PathKind::Lowrank,
        sizes: vec![300, 600],
        repeats: 1,
        ..RunConfig::default()
    };
    let a = run_benchmark(&lowrank).unwrap();
    let b = run_benchmark(&lowrank).unwrap();
    let untimed = |r: &Report| -> Vec<Vec<String>> {
        r.find_table("points").unwrap().1.iter().map(|row| row[..row.len() - 1].to_vec()).collect()
    };
    assert_eq!(untimed(&a), untimed(&b));
}

#[test]
fn depth_scan_records_one_row_per_layer() {
    let report = run_depth_scan(&RunConfig { layers: 12, ..fixture_cfg() }).unwrap();
    let (header, rows) = report.find_table("layers").unwrap();
    assert_eq!(header[0], "l");
    assert_eq!(rows.len(), 12);
    assert!(report.get_f64("limit", "lambda").is_some());
}

#[test]
fn config_sections_apply_per_command() {
    let text = "seed = 4\nlayers = 3\n[infer]\narch = gin\n[depth-scan]\narch = mlp\n";
    let path = std::path::Path::new("run.cfg");
    let infer = RunConfig::from_settings(&parse_config(text, "infer", path).unwrap()).unwrap();
    let scan = RunConfig::from_settings(&parse_config(text, "depth-scan", path).unwrap()).unwrap();
    assert_eq!(infer.arch.name(), "gin");
    assert_eq!(scan.arch.name(), "mlp");
    assert_eq!((infer.seed, scan.layers), (4, 3));
}

#[test]
fn cli_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("report.txt");
    fs::write(&cfg, "[infer]\narch = gin\nlayers = 3\nnugget = 0.5\n").unwrap();
    let status = bin()
        .args(["infer", "--config"])
        .arg(&cfg)
        .arg("--dataset")
        .arg(fixture_dir())
        .args(["--layers", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report = Report::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.get("run", "arch"), Some("gin"));
    assert_eq!(report.get("run", "layers"), Some("2"));
    assert_eq!(report.get_f64("nugget", "selected"), Some(0.5));
}

#[test]
fn cli_reports_errors_on_stderr() {
    let output = bin().args(["infer", "--dataset", "/nonexistent/dir"]).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error:"));
    let output = bin().args(["infer", "--dataset"]).arg(fixture_dir()).args(["--arch", "transformer"]).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn make_splits_writes_seeded_splits() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    fs::remove_file(dir.path().join("splits.json")).unwrap();
    let run = |seed: &str| {
        let status = bin()
            .args(["make-splits", "--dataset"])
            .arg(dir.path())
            .args(["--ratios", "0.5,0.25,0.25", "--seed", seed])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        read_splits(&dir.path().join("splits.json")).unwrap()
    };
    let a = run("3");
    assert_eq!((a.train.len(), a.val.len(), a.test.len()), (2, 1, 1));
    assert_eq!(a, run("3"));
    assert!(load_dataset(dir.path()).is_ok());
}

#[test]
fn every_subcommand_runs_from_the_command_line() {
    let fixture = fixture_dir();
    let fixture = fixture.to_str().unwrap();
    for args in [
        vec!["infer", "--dataset", fixture, "--path", "lowrank", "--landmark-pool", "all", "--center"],
        vec!["infer", "--dataset", fixture, "--arch", "rbf", "--gamma-grid", "0.01,100,3"],
        vec!["depth-scan", "--dataset", fixture, "--layers", "4"],
        vec!["depth-scan", "--synthetic", "10", "--arch", "mlp", "--sigma-b", "0.3", "--layers", "5"],
        vec!["mc-verify", "--width", "32", "--samples", "10", "--widths", "16,32", "--mc-seeds", "2"],
        vec!["benchmark", "--path", "lowrank", "--sizes", "200,400", "--repeats", "1"],
    ] {
        let output = bin().args(&args).output().unwrap();
        assert!(output.status.success(), "{args:?}: {}", String::from_utf8_lossy(&output.stderr));
        Report::parse(&String::from_utf8(output.stdout).unwrap()).unwrap();
    }
}
