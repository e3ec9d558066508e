//! End-to-end tests of the `cgs` binary: exit codes, result files, and the
//! reproducibility contract.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cgs")
}

fn run_with(config: &str, dir: &Path, extra: &[&str]) -> Output {
    let config_path = dir.join("config.json");
    fs::write(&config_path, config).unwrap();
    let out_dir = dir.join("out");
    Command::new(bin())
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cgs_cli_test_{name}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn digests(out_dir: &Path) -> BTreeMap<String, String> {
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("run_manifest.json")).unwrap())
            .unwrap();
    manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            (
                f["name"].as_str().unwrap().to_string(),
                f["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn ed_spectrum_matches_oracle_rows() {
    let dir = tmpdir("ed");
    let out = run_with(
        r#"{"command":"ed","geometry":{"lx":2,"ly":2},"ed":{"lambda_j":1.0,"lambda_flip":1.0}}"#,
        &dir,
        &[],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let spectrum = fs::read_to_string(dir.join("out/run_spectrum.csv")).unwrap();
    let rows: Vec<&str> = spectrum.lines().collect();
    assert_eq!(rows[0], "index,energy,degeneracy");
    for (i, row) in rows[1..5].iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[0], i.to_string());
        let energy: f64 = cells[1].parse().unwrap();
        assert!((energy + 8.0).abs() < 1e-9, "row {i}: {row}");
        assert_eq!(cells[2], "4");
    }
    let fifth: f64 = rows[5].split(',').nth(1).unwrap().parse().unwrap();
    assert!((fifth + 4.0).abs() < 1e-9);
    // Manifest references every result file.
    let d = digests(&dir.join("out"));
    assert!(d.contains_key("run_spectrum.csv"));
    assert!(d.contains_key("run_ed_check.json"));
}

#[test]
fn symmetry_output_contains_the_example_pair() {
    let dir = tmpdir("symmetry");
    let out = run_with(r#"{"command":"symmetry"}"#, &dir, &[]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/run_symmetry.json")).unwrap())
            .unwrap();
    assert_eq!(doc["diagonal_r_count"], 8);
    let pairs = doc["diagonal_r_pairs"].as_array().unwrap();
    let example = serde_json::json!({
        "left": {"perm": [1, 0, 3, 2], "signs": [1, 1, -1, -1]},
        "right": {"perm": [0, 1, 2, 3], "signs": [-1, -1, 1, 1]},
    });
    assert!(pairs.contains(&example), "pairs: {pairs:?}");
}

#[test]
fn odd_lattice_is_a_config_error() {
    let dir = tmpdir("oddlat");
    let out = run_with(
        r#"{"command":"ed","geometry":{"lx":3,"ly":2},"ed":{"lambda_j":1.0,"lambda_flip":1.0}}"#,
        &dir,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("even"),
        "stderr must name the even requirement: {err}"
    );
}

#[test]
fn mc_without_seed_is_a_config_error() {
    let dir = tmpdir("noseed");
    let out = run_with(
        r#"{"command":"mc","geometry":{"lx":2,"ly":2},"mc":{"k_eff":[50.0],"mode":"effective_theta","steps":10000}}"#,
        &dir,
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tmpdir("unknown");
    let out = run_with(r#"{"command":"symmetry","symetry":{}}"#, &dir, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("symetry"));
}

#[test]
fn size_guard_maps_to_exit_4() {
    let dir = tmpdir("guard");
    let out = run_with(
        r#"{"command":"loops","geometry":{"lx":6,"ly":4},"loops":{"lambda":[1.0]}}"#,
        &dir,
        &[],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn mc_reruns_are_byte_identical_across_worker_counts() {
    let mc_config = r#"{
        "command": "mc",
        "geometry": {"lx": 2, "ly": 2},
        "seed": 91,
        "mc": {"k_eff": [40.0, 80.0], "mode": "effective_theta", "steps": 30000, "chains": 2}
    }"#;
    let dir1 = tmpdir("det1");
    let dir2 = tmpdir("det2");
    let dir3 = tmpdir("det3");
    let out1 = run_with(mc_config, &dir1, &["--workers", "1"]);
    let out2 = run_with(mc_config, &dir2, &["--workers", "4"]);
    let out3 = run_with(mc_config, &dir3, &["--workers", "1"]);
    assert!(out1.status.success() && out2.status.success() && out3.status.success());
    let d1 = digests(&dir1.join("out"));
    let d2 = digests(&dir2.join("out"));
    let d3 = digests(&dir3.join("out"));
    assert_eq!(d1, d2, "worker count changed result bytes");
    assert_eq!(d1, d3, "rerun changed result bytes");
    // Raw bytes too, not only digests.
    let s1 = fs::read(dir1.join("out/run_mc_summary.csv")).unwrap();
    let s2 = fs::read(dir2.join("out/run_mc_summary.csv")).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn worker_env_var_is_honored_when_flag_absent() {
    let mc_config = r#"{
        "command": "mc",
        "geometry": {"lx": 2, "ly": 2},
        "seed": 91,
        "mc": {"k_eff": [40.0], "mode": "effective_theta", "steps": 20000, "chains": 2}
    }"#;
    let dir = tmpdir("envworkers");
    let config_path = dir.join("config.json");
    fs::write(&config_path, mc_config).unwrap();
    let out_dir = dir.join("out");
    let out = Command::new(bin())
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .env("CGS_WORKERS", "2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    // Same bytes as a flag-driven run: parallelism never changes results.
    let dir_flag = tmpdir("envworkers_flag");
    let out2 = run_with(mc_config, &dir_flag, &["--workers", "1"]);
    assert!(out2.status.success());
    assert_eq!(digests(&out_dir), digests(&dir_flag.join("out")));
}

#[test]
fn seed_override_changes_results() {
    let mc_config = r#"{
        "command": "mc",
        "geometry": {"lx": 2, "ly": 2},
        "seed": 91,
        "mc": {"k_eff": [40.0], "mode": "effective_theta", "steps": 20000}
    }"#;
    let dir1 = tmpdir("seed1");
    let dir2 = tmpdir("seed2");
    let out1 = run_with(mc_config, &dir1, &[]);
    let out2 = run_with(mc_config, &dir2, &["--seed", "17"]);
    assert!(out1.status.success() && out2.status.success());
    let d1 = digests(&dir1.join("out"));
    let d2 = digests(&dir2.join("out"));
    assert_ne!(d1["run_mc_summary.csv"], d2["run_mc_summary.csv"]);
    // The manifest echoes the effective seed.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir2.join("out/run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 17);
}

#[test]
fn classical_paths_are_flat_and_naive_has_barrier() {
    let dir = tmpdir("classical");
    let out = run_with(
        r#"{"command":"classical","geometry":{"lx":4,"ly":4},"seed":5,"classical":{"n_steps":64}}"#,
        &dir,
        &[],
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("out/run_classical_summary.json")).unwrap(),
    )
    .unwrap();
    assert!(doc["paths"]["type_a"]["max_excursion"].as_f64().unwrap() < 1e-9);
    assert!(doc["paths"]["type_b"]["max_excursion"].as_f64().unwrap() < 1e-9);
    assert!(doc["paths"]["naive"]["max_excursion"].as_f64().unwrap() > 0.1);
    // Path CSV covers the sweep out to π.
    let csv = fs::read_to_string(dir.join("out/run_path_type_a.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let dtheta: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((dtheta - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn wkb_fit_recovers_quarter_exponent() {
    let dir = tmpdir("wkb");
    let out = run_with(
        r#"{"command":"wkb","wkb":{"k":1.0,"K":2.0,"jc_from":1.0,"jc_to":2000.0}}"#,
        &dir,
        &[],
    );
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("out/run_wkb_fit.json")).unwrap())
            .unwrap();
    let slope = doc["fitted_exponent"].as_f64().unwrap();
    assert!((slope - 0.25).abs() < 1e-6);
}
