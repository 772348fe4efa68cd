use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sigdelta"))
}

fn run(cmd: &str, config: &Value, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{cmd}.config.json"));
    fs::write(&cfg, config.to_string()).unwrap();
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Data rows of a CSV with a leading `#` line, as strings.
fn read_csv(p: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(p).unwrap();
    assert!(text.starts_with("# {"));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn quantize_classical_constant() {
    let d = TempDir::new().unwrap();
    let cfg = json!({
        "filter": {"k": 3},
        "signal": {"kind": "constant", "value": 0.3},
        "horizon": 500,
        "init": "random"
    });
    ok(&run("quantize", &cfg, d.path(), &["--seed", "4"]));
    let s = read_json(d.path().join("out/summary.json"));
    assert_eq!(s["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(s["config"]["signal"]["value"], 0.3);
    assert_eq!(s["seed"], 4);
    assert!(s["max_abs_v"].as_f64().unwrap() <= 1.0);
    assert_eq!(s["stability"]["regime"], "classical");
    let (h, rows) = read_csv(d.path().join("out/trace.csv"));
    assert_eq!(h, ["n", "y", "q", "v"]);
    assert_eq!(rows.len(), 500);
}

#[test]
fn quantize_sinusoid_figure() {
    let d = TempDir::new().unwrap();
    let cfg = json!({
        "filter": {"k": 3},
        "signal": {"kind": "sinusoid", "amplitude": 0.785, "frequency": 2.0, "interval": [0.0, 1.0]},
        "lambda": 500.0
    });
    ok(&run("quantize", &cfg, d.path(), &[]));
    let s = read_json(d.path().join("out/summary.json"));
    assert_eq!(s["time_stretch"], 4.0);
    assert_eq!(s["samples"], 2001);
    let ex = s["excursions"].as_array().unwrap();
    assert!(!ex.is_empty());
    assert!(ex.iter().all(|e| e["large_input"] == true));
    assert_eq!(s["sign_coupling_violations"], 0);
}

#[test]
fn trace_round_trips_through_samples_file() {
    let d = TempDir::new().unwrap();
    let cfg = json!({
        "filter": {"k": 4},
        "signal": {"kind": "blsum", "components": [
            {"amplitude": 0.4, "frequency": 0.31, "phase": 0.2},
            {"amplitude": 0.35, "frequency": 0.07}
        ], "interval": [0.0, 20.0]},
        "lambda": 37.0,
        "init": "random"
    });
    ok(&run("quantize", &cfg, d.path(), &["--seed", "9"]));
    let first = d.path().join("first");
    fs::rename(d.path().join("out"), &first).unwrap();
    let init = read_json(first.join("summary.json"))["init"].clone();
    let again = json!({
        "filter": {"k": 4},
        "signal": {"kind": "samples_file", "path": first.join("trace.csv")},
        "init": init
    });
    ok(&run("quantize", &again, d.path(), &[]));
    let (_, a) = read_csv(first.join("trace.csv"));
    let (_, b) = read_csv(d.path().join("out/trace.csv"));
    assert_eq!(a, b);
}

#[test]
fn gap_report_columns() {
    let d = TempDir::new().unwrap();
    let ks: Vec<usize> = (3..=20).collect();
    ok(&run(
        "gap-report",
        &json!({"k": ks, "y_points": 20, "amplitudes": [0.5]}),
        d.path(),
        &[],
    ));
    let (h, rows) = read_csv(d.path().join("out/gap_report.csv"));
    assert_eq!(h[1], "y_star");
    assert_eq!(rows.len(), 18);
    for r in &rows {
        let p = |i: usize| r[i].parse::<f64>().unwrap();
        assert!(p(1) > p(2), "row {r:?}");
        assert!(p(4) > 0.5);
    }
    let j = read_json(d.path().join("out/gap_report.json"));
    assert_eq!(j["rows"][0]["reports"][0]["k"], 3);

    let d1 = TempDir::new().unwrap();
    ok(&run("gap-report", &json!({"k": [7]}), d1.path(), &[]));
    assert_eq!(read_csv(d1.path().join("out/gap_report.csv")).1.len(), 1);
}

#[test]
fn sweep_constant_boundary_and_determinism() {
    let d = TempDir::new().unwrap();
    let amps: Vec<f64> = (1..20).map(|j| j as f64 * 0.05).collect();
    let cfg = json!({"family": "constant", "k": [3], "amplitudes": amps, "horizon": 5000, "inits": 5});
    ok(&run("sweep", &cfg, d.path(), &["--seed", "1", "--threads", "1"]));
    let one = fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    ok(&run("sweep", &cfg, d.path(), &["--seed", "1", "--threads", "3"]));
    let three = fs::read_to_string(d.path().join("out/sweep.csv")).unwrap();
    assert_eq!(one, three);
    let (h, rows) = read_csv(d.path().join("out/sweep.csv"));
    let col = |n: &str| h.iter().position(|c| c == n).unwrap();
    // the largest amplitude with a bounded run
    let mut edge = 0.0;
    for r in &rows {
        let a: f64 = r[col("amplitude")].parse().unwrap();
        if r[col("certified")] == "true" {
            assert_eq!(r[col("violations")], "0", "a={a}");
        }
        if r[col("max_abs_v")].parse::<f64>().unwrap() < 10.0 {
            edge = a;
        }
    }
    assert!(edge >= 1.0 - 2.0 / 3.0);
    assert!(edge >= 1.0 - std::f64::consts::E.powi(2) / 16.0);
}

#[test]
fn sweep_blsum_at_lambda0() {
    let d = TempDir::new().unwrap();
    let cfg =
        json!({"family": "blsum", "k": [19], "amplitudes": [0.9], "spectra": 2, "interval": [0.0, 20.0]});
    ok(&run("sweep", &cfg, d.path(), &[]));
    let (h, rows) = read_csv(d.path().join("out/sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][h.iter().position(|c| c == "violations").unwrap()], "0");
    assert_eq!(rows[0][2], "253");
}

#[test]
fn empty_sweep_has_header_only() {
    let d = TempDir::new().unwrap();
    ok(&run(
        "sweep",
        &json!({"family": "constant", "k": [], "amplitudes": []}),
        d.path(),
        &[],
    ));
    let (h, rows) = read_csv(d.path().join("out/sweep.csv"));
    assert_eq!(h.len(), 13);
    assert!(rows.is_empty());
}

#[test]
fn adversary_runs() {
    let d = TempDir::new().unwrap();
    let cfg = json!({"runs": [
        {"name": "step", "k": 3, "amplitude": 0.7, "mode": "fixed_step", "change_index": 6, "new_level": -0.7, "horizon": 12},
        {"name": "flip", "k": 3, "amplitude": 0.7, "mode": "peak_flip", "horizon": 10000},
        {"name": "capped", "k": 3, "amplitude": 0.7, "mode": "peak_flip", "horizon": 20000, "smooth_cap": true}
    ]});
    ok(&run("adversary", &cfg, d.path(), &[]));
    let j = read_json(d.path().join("out/adversary.json"));
    let runs = j["runs"].as_array().unwrap();
    assert_eq!(runs[0]["first_below_minus_one"], 8);
    assert_eq!(runs[1]["verdict"], "diverging");
    assert_eq!(runs[2]["verdict"], "bounded");
    let (h, rows) = read_csv(d.path().join("out/flip.csv"));
    assert_eq!(h, ["n", "y", "v"]);
    assert_eq!(rows.len(), 10000);
}

#[test]
fn reconstruct_from_samples_and_bits() {
    let d = TempDir::new().unwrap();
    let signal = json!({"kind": "blsum", "components": [
        {"amplitude": 0.3, "frequency": 0.21, "phase": 1.0},
        {"amplitude": 0.2, "frequency": 0.43}
    ], "interval": [0.0, 100.0]});
    let cfg = json!({"signal": signal, "filter": {"k": 8}, "lambda": 8.0, "source": "samples"});
    ok(&run("reconstruct", &cfg, d.path(), &[]));
    let s = read_json(d.path().join("out/summary.json"));
    assert!(s["sup_error"]["value"].as_f64().unwrap() < 1e-6);
    let cfg = json!({"signal": signal, "filter": {"k": 8}, "lambda": 200.0, "csv_stride": 10});
    ok(&run("reconstruct", &cfg, d.path(), &[]));
    let s = read_json(d.path().join("out/summary.json"));
    assert_eq!(s["within_bound"], true);
    let (h, rows) = read_csv(d.path().join("out/reconstruction.csv"));
    assert_eq!(h, ["t", "f", "f_q", "error"]);
    assert!(!rows.is_empty());
}

#[test]
fn analyze_filter_minimal() {
    let d = TempDir::new().unwrap();
    ok(&run(
        "analyze-filter",
        &json!({"filter": {"k": 3}, "table_rows": 10, "amplitudes": [0.8]}),
        d.path(),
        &[],
    ));
    let j = read_json(d.path().join("out/filter.json"));
    assert_eq!(j["moments"]["satisfied"], true);
    assert_eq!(j["g"]["support"], 3);
    assert_eq!(j["minimal"]["amplitudes"][0]["critical"]["coverage"], 17);
    let (h, rows) = read_csv(d.path().join("out/coefficient_table.csv"));
    assert_eq!(h, ["n", "h1", "h2", "h3", "h4"]);
    assert_eq!(rows.len(), 11);
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let o = run(
        "quantize",
        &json!({"filter": {"k": 3}, "signal": {"kind": "constant", "value": "x"}, "horizon": 5}),
        d.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("signal"));
    let o = run(
        "quantize",
        &json!({"filter": {"k": 3}, "signal": {"kind": "constant", "value": 0.1}, "horizn": 5}),
        d.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(bin().arg("quantize").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("nonsense").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    let o = run(
        "quantize",
        &json!({"filter": {"taps": [10.0]}, "signal": {"kind": "constant", "value": 0.5}, "horizon": 1000}),
        d.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!d.path().join("out/trace.csv").exists());
}
