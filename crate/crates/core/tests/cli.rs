use std::path::Path;
use std::process::{Command, Output};

fn discset(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discset"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn planes_run_eval_plot_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = discset(&["planes", "--out", "fan.ply", "--case", "fixed_dd_90", "--points-per-plane", "2500"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("fan.truth.json").exists());

    let o = discset(
        &[
            "run", "--input", "fan.ply", "--out", "out", "--min-cluster-size", "400", "--min-samples", "15",
            "--eps-factor", "4", "--min-pts", "8", "--no-timing", "--csv",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["sets"].as_array().unwrap().len(), 7);
    assert!(report["timings_ms"].as_object().unwrap().is_empty());

    let o = discset(
        &["eval", "--identified", "out/report.json", "--reference", "fan.truth.json", "--out", "eval.json"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let eval: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("eval.json")).unwrap()).unwrap();
    assert_eq!(eval["pairs"].as_array().unwrap().len(), 7);
    assert!(eval["mae_dip"].as_f64().unwrap() < 0.5);
    assert!(eval["unmatched_reference"].as_array().unwrap().is_empty());

    let o = discset(&["plot", "--report", "out/report.json", "--poles", "out/poles.csv", "--out", "p.svg"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(d.join("p.svg")).unwrap();
    assert_eq!(svg.matches("class=\"legend-entry\"").count(), 7);
}

#[test]
fn generators_write_fixture_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = discset(&["icosphere", "--out", "ico.ply", "--points-per-face", "50"], d);
    assert_eq!(code(&o), 0);
    let truth: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("ico.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["faces"].as_array().unwrap().len(), 80);

    let o = discset(&["noisy-plane", "--out", "np.ply", "--dip", "30", "--dipdir", "300", "--sigma", "0.005"], d);
    assert_eq!(code(&o), 0);
    let cloud = discset::cloud::read_ply(d.join("np.ply")).unwrap();
    assert_eq!(cloud.len(), 6400);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // Input errors.
    assert_eq!(code(&discset(&["run", "--input", "missing.xyz", "--out", "o"], d)), 3);
    std::fs::write(d.join("bad.xyz"), "1 2 3\n4 five 6\n").unwrap();
    assert_eq!(code(&discset(&["run", "--input", "bad.xyz", "--out", "o"], d)), 3);

    // Configuration errors.
    std::fs::write(d.join("c.toml"), "input = \"x.xyz\"\nnope = 3\n").unwrap();
    assert_eq!(code(&discset(&["run", "--config", "c.toml"], d)), 2);
    assert_eq!(code(&discset(&["run", "--input", "x.xyz", "--min-cluster-size", "1"], d)), 2);
    assert_eq!(code(&discset(&["run", "--input", "x.xyz", "--frames", "sideways"], d)), 2);
    assert_eq!(code(&discset(&["run"], d)), 2);
    assert_eq!(code(&discset(&["bogus-verb"], d)), 2);

    // Pipeline error: a spacing outside the radius formula's range.
    let o = discset(&["noisy-plane", "--out", "np.ply"], d);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&discset(&["run", "--input", "np.ply", "--out", "o", "--ps", "0.4"], d)), 4);
    assert!(!d.join("o/report.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&discset(&["planes", "--out", "fan.ply", "--case", "fixed_dd_90", "--points-per-plane", "2000"], d)), 0);
    std::fs::write(
        d.join("c.toml"),
        "input = \"fan.ply\"\nout = \"from_config\"\nno_timing = true\n\n[cluster]\nmin_cluster_size = 300\nmin_samples = 10\n\n[planes]\nmin_pts = 8\neps_factor = 4.0\n",
    )
    .unwrap();
    let o = discset(&["run", "--config", "c.toml", "--out", "from_flag"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("from_flag/report.json").exists());
    assert!(!d.join("from_config").exists());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("from_flag/report.json")).unwrap()).unwrap();
    assert_eq!(report["sets"].as_array().unwrap().len(), 7);
}
