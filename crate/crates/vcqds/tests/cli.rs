//! The binary end to end: exit codes, error records, determinism and the
//! files each subcommand leaves behind.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vcqds::artifact::read_factorization;
use vcqds::io::read_series;

fn vcqds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcqds")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> serde_json::Value {
    let out = vcqds(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn error_record(out: &Output) -> serde_json::Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr is one JSON record")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cartan_on_an_abelian_model_needs_no_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(&["cartan", "--model", "heisenberg2", "--output-dir", path(dir.path())]);
    assert_eq!(report["iterations"], 0);
    assert_eq!(report["residual"], 0.0);
    let f = read_factorization(&dir.path().join("factorization.txt")).unwrap();
    assert!(f.k_angles.is_empty());
    assert_eq!(f.h_coeffs.len(), 3);
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn missing_input_file_exits_2_naming_the_path() {
    let out = vcqds(&["cartan", "--hamiltonian", "/nonexistent/h.txt", "--dipole", "/nonexistent/d.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "io");
    assert_eq!(rec["exit_code"], 2);
    assert!(rec["path"].as_str().unwrap().contains("/nonexistent/"));
}

#[test]
fn malformed_inputs_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.toml");
    fs::write(&plan, "model = \"heisenberg2\"\ne0 = 1e-5\nkick_strength = 3\n").unwrap();
    let out = vcqds(&["evolve", "--config", path(&plan)]);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "parse");
    assert_eq!(rec["line"], 3);

    let h = dir.path().join("h.txt");
    let d = dir.path().join("d.txt");
    fs::write(&h, "# n_qubits: 2\n1.0 ZZ\n0.5 XQ\n").unwrap();
    fs::write(&d, "1.0 ZI\n").unwrap();
    let out = vcqds(&["cartan", "--hamiltonian", path(&h), "--dipole", path(&d)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["line"], 3);

    let out = vcqds(&["evolve", "--model", "heisenberg2", "--gamma", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_must_be_positive() {
    let out = Command::new(env!("CARGO_BIN_EXE_vcqds"))
        .args(["cartan", "--model", "heisenberg2", "--output-dir", "/tmp/never-written"])
        .env("VCQDS_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_and_manifest_replays_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let (a, b, c) = (root.path().join("a"), root.path().join("b"), root.path().join("c"));
    let args = |out: &Path| {
        ok(&["evolve", "--model", "heisenberg2", "--t-total", "5", "--seed", "7", "--with-exact", "--output-dir", path(out)])
    };
    let report = args(&a);
    args(&b);
    let first = csvs(&a);
    assert!(first.iter().any(|(n, _)| n == "sz0.csv") && first.iter().any(|(n, _)| n == "field.csv"));
    assert_eq!(first, csvs(&b));
    assert!(report["exact_max_deviation"]["sz_total"].as_f64().unwrap() < 1e-10);
    assert!(a.join("exact").join("sz0.csv").exists());

    let manifest = fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 7"));
    let replay = root.path().join("replay.toml");
    fs::write(&replay, manifest).unwrap();
    ok(&["evolve", "--config", path(&replay), "--output-dir", path(&c)]);
    assert_eq!(first, csvs(&c));
}

#[test]
fn zero_field_leaves_an_eigenstate_alone() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["evolve", "--model", "heisenberg2", "--e0", "0", "--t-total", "10", "--output-dir", path(dir.path())]);
    for name in ["sz0", "sz1", "sz_total"] {
        let s = read_series(&dir.path().join(format!("{name}.csv"))).unwrap();
        let spread = s.values.iter().fold(0.0f64, |m, v| m.max((v - s.values[0]).abs()));
        assert!(spread < 1e-12, "{name} moved by {spread:e}");
    }
    let field = read_series(&dir.path().join("field.csv")).unwrap();
    assert!(field.values.iter().all(|&v| v == 0.0));
}

#[test]
fn plain_cosine_peaks_at_its_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let (w, dt, n) = (1.3, 0.05, 2000);
    let mut text = String::from("t,value\n");
    for k in 0..n {
        let t = k as f64 * dt;
        text += &format!("{t},{}\n", (w * t).cos());
    }
    let input = dir.path().join("wave.csv");
    fs::write(&input, text).unwrap();
    let report = ok(&["spectrum", "--input", path(&input), "--damping", "0.01", "--output-dir", path(dir.path())]);
    let bin = 2.0 * std::f64::consts::PI / (8.0 * n as f64 * dt);
    let peak = report["peaks"]["wave"][0][0].as_f64().unwrap();
    assert!((peak - w).abs() <= bin, "peak {peak} vs {w} (bin {bin})");
    assert!(dir.path().join("spectrum_wave.csv").exists());
    assert!(fs::read_to_string(dir.path().join("peaks_wave.csv")).unwrap().starts_with("omega,height,fwhm\n"));
}

#[test]
fn spectrum_from_an_evolve_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    ok(&["evolve", "--model", "heisenberg2", "--t-total", "50", "--output-dir", out]);
    let report = ok(&["spectrum", "--model", "heisenberg2", "--t-total", "50", "--output-dir", out]);
    assert_eq!(report["kind"], "susceptibility");
    // singlet-triplet gap of the two-site chain, 4 in Pauli units
    let peak = report["peaks"]["chi_0_0.csv"][0][0].as_f64().unwrap();
    assert!((peak - 4.0).abs() < 0.02, "{peak}");
    assert!(dir.path().join("corr_1_0.csv").exists());

    let empty = tempfile::tempdir().unwrap();
    let out = vcqds(&["spectrum", "--model", "heisenberg2", "--output-dir", path(empty.path())]);
    assert_eq!(out.status.code(), Some(2));
}
