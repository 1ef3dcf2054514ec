use std::fs;
use std::path::Path;
use std::process::Command;

use qbtransfer::metrics::TransferMetrics;
use qbtransfer_cli::export::{metrics_table, DataManifest, JsonDocument};
use qbtransfer_cli::{
    parse_str, render, run, run_with_workers, write_outputs, CliError, ExperimentConfig, Format,
    Results, RunReport,
};

fn config(text: &str) -> ExperimentConfig {
    parse_str(text).unwrap().resolve().unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn small_sweep(dir: &Path, workers: usize) -> ExperimentConfig {
    let mut c = config(
        r#"{
            "mode": "sweep",
            "system": {"convention": "inverted"},
            "cavity": {"kind": "fock", "n": 1},
            "grid": {"g_min": 0.1, "g_max": 0.4, "g_points": 7, "window": 30}
        }"#,
    );
    c.output.dir = dir.to_path_buf();
    c.workers = Some(workers);
    c
}

#[test]
fn sweep_csv_is_identical_across_reruns_and_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, workers) in [1, 3, 1].into_iter().enumerate() {
        let cfg = small_sweep(&tmp.path().join(format!("run{i}")), workers);
        let report = run_with_workers(&cfg).unwrap();
        write_outputs(&report, &cfg, workers, 0.0).unwrap();
        outputs.push(fs::read(cfg.output.dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn sweep_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_sweep(tmp.path(), 1);
    let report = run(&cfg).unwrap();
    let paths = write_outputs(&report, &cfg, 1, 0.5).unwrap();
    assert_eq!(paths.len(), 2);
    let text = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "g,e_max,t_max,p_max,dissipative");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 5);
    // 12 significant digits in scientific notation
    assert_eq!(first[0], "1.00000000000e-1");
    assert_eq!(first[4], "false");
    assert_eq!(text.lines().count(), 8);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("sweep_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["tool"], "qbtransfer");
    assert_eq!(manifest["wall_time_s"], 0.5);
    assert_eq!(manifest["config"]["system"]["n_max"], 10);
    assert_eq!(manifest["config"]["bath"]["beta"], 10.0);
    assert_eq!(manifest["files"][0], "sweep.csv");
}

fn metric(g: f64) -> TransferMetrics {
    TransferMetrics {
        g,
        e_max: 0.1 + g / 3.0,
        t_max: 1.0 / 7.0 + g,
        p_max: (0.1 + g / 3.0) / (1.0 / 7.0 + g),
        dissipative: true,
        search_window: 50.0,
        t_max_closed: Some(std::f64::consts::PI),
        e_max_closed: Some(0.123_456_789_012_345_68),
    }
}

#[test]
fn empty_sweep_cannot_be_exported() {
    assert!(matches!(metrics_table(&[]), Err(CliError::Empty(_))));
    let cfg = config(r#"{"mode": "sweep", "cavity": {"kind": "fock", "n": 1}}"#);
    let report = RunReport {
        results: Results::Sweep { points: vec![] },
        failures: vec![],
    };
    let manifest = DataManifest::new(&cfg, &[]);
    for format in [Format::Csv, Format::Json] {
        assert!(matches!(
            render(&report, &manifest, format, "x"),
            Err(CliError::Empty(_))
        ));
    }
}

#[test]
fn json_export_round_trips_at_full_precision() {
    let cfg = config(r#"{"mode": "sweep", "cavity": {"kind": "coherent", "n_bar": 1.7}}"#);
    let points: Vec<TransferMetrics> = [0.1, 0.2, 1.0 / 3.0].into_iter().map(metric).collect();
    let report = RunReport {
        results: Results::Sweep {
            points: points.clone(),
        },
        failures: vec![],
    };
    let manifest = DataManifest::new(&cfg, &[]);
    let files = render(&report, &manifest, Format::Json, "fig3b").unwrap();
    assert_eq!(files.len(), 1);
    assert_eq!(files[0].name, "fig3b.json");
    let doc: JsonDocument = serde_json::from_str(&files[0].contents).unwrap();
    assert_eq!(doc.manifest, manifest);
    match doc.results {
        Results::Sweep { points: back } => assert_eq!(back, points),
        other => panic!("wrong variant {other:?}"),
    }
}

#[test]
fn csv_keeps_twelve_significant_digits() {
    let text = metrics_table(&[metric(1.0 / 3.0)]).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .take(4)
        .map(|v| v.parse().unwrap())
        .collect();
    let m = metric(1.0 / 3.0);
    for (v, exact) in row.iter().zip([m.g, m.e_max, m.t_max, m.p_max]) {
        assert!(((v - exact) / exact).abs() < 1e-11);
    }
}

#[test]
fn spectrum_mode_writes_levels_and_crossings() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(
        r#"{"mode": "spectrum", "cavity": {"kind": "fock", "n": 8},
            "output": {"figure": "fig2"}}"#,
    );
    cfg.output.dir = tmp.path().to_path_buf();
    let report = run(&cfg).unwrap();
    write_outputs(&report, &cfg, 1, 0.0).unwrap();
    let (header, rows) = csv_rows(&tmp.path().join("fig2.csv"));
    let mut expected = vec!["g".to_string()];
    expected.extend((1..=12).map(|k| format!("E_{k}")));
    assert_eq!(header, expected);
    assert_eq!(rows.len(), 201);
    for r in &rows {
        assert!(r[1..].windows(2).all(|w| w[1] >= w[0]));
    }
    let text = fs::read_to_string(tmp.path().join("fig2_crossings.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rank,g_star,energy,min_gap,weight,level_a,level_b,track_a,track_b"
    );
    let g_stars: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(
        g_stars.iter().any(|g| (g - 0.34).abs() <= 0.01),
        "{g_stars:?}"
    );
}

#[test]
fn dissipative_evolve_reaches_eighty_percent() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(
        r#"{"mode": "evolve",
            "system": {"g": 0.2, "convention": "inverted"},
            "bath": {"alpha_1": 0.03, "alpha_2": 0.01},
            "cavity": {"kind": "coherent", "n_bar": 8},
            "grid": {"t_end": 3.5}}"#,
    );
    cfg.output.dir = tmp.path().to_path_buf();
    let report = run(&cfg).unwrap();
    write_outputs(&report, &cfg, 1, 0.0).unwrap();
    let (header, rows) = csv_rows(&tmp.path().join("evolve.csv"));
    assert_eq!(header, ["t", "E_B"]);
    assert_eq!(rows.len(), 351);
    let e_max = rows.iter().map(|r| r[1]).fold(f64::MIN, f64::max);
    assert!((e_max - 0.80).abs() <= 0.05, "E_max = {e_max}");
}

#[test]
fn evolve_with_several_couplings_shares_the_time_axis() {
    let cfg = config(
        r#"{"mode": "evolve", "cavity": {"kind": "fock", "n": 1},
            "grid": {"g_values": [0.1, 0.3], "t_end": 2, "dt": 0.5}}"#,
    );
    let report = run(&cfg).unwrap();
    let files = render(&report, &DataManifest::new(&cfg, &[]), Format::Csv, "fig5").unwrap();
    let text = &files[0].contents;
    assert_eq!(text.lines().next().unwrap(), "t,E_B(g=0.1),E_B(g=0.3)");
    assert_eq!(text.lines().count(), 6);
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn binary_applies_flags_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"mode": "spectrum", "cavity": {"kind": "fock", "n": 1},
            "grid": {"g_values": [0.1, 0.2, 0.3]},
            "output": {"dir": "ignored"}}"#,
    );
    let out = tmp.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .arg(&cfg)
        .args([
            "--mode",
            "evolve",
            "--format",
            "json",
            "--workers",
            "2",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("evolve.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("evolve_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["mode"], "evolve");
    assert_eq!(manifest["workers"], 2);
    assert!(!tmp.path().join("ignored").exists());

    let bad = write_config(
        tmp.path(),
        r#"{"mode": "spectrum", "system": {"omega_Q": 1}, "cavity": {"kind": "fock", "n": 1}}"#,
    );
    let result = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("omega_Q"));
}
