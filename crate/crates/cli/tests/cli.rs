use std::path::Path;
use std::process::{Command, Output};

const SMALL_LSFC: &str = r#"
scenario = "lsfc_vs_spacing"
n_trials = 40
seed = 11
antenna_counts = [32]
j_blocks = [1, 4]

[spatial]
angle_spread_deg = [15.0]
spacing_wavelengths = [0.5, 1.0]
"#;

fn csi_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csi-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_LSFC);
    let out = dir.path().join("out");
    let res = csi_sim(&["run", &cfg, "--out", out.to_str().unwrap(), "--workers", "1"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = std::fs::read_to_string(out.join("lsfc_vs_spacing.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("scenario,"));
    assert!(header.ends_with("metric,value,n,stderr"));
    // 2 spacings x 2 block counts x (nmse, failure rate)
    assert_eq!(csv.lines().count(), 1 + 8);

    let svg = std::fs::read_to_string(out.join("lsfc_vs_spacing.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn no_plot_skips_the_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_LSFC);
    let out = dir.path().join("out");
    let res = csi_sim(&[
        "run",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--trials",
        "10",
        "--no-plot",
    ]);
    assert!(res.status.success());
    assert!(out.join("lsfc_vs_spacing.csv").exists());
    assert!(!out.join("lsfc_vs_spacing.svg").exists());
}

#[test]
fn output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_LSFC);
    let mut csvs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let res = csi_sim(&["run", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert!(res.status.success());
        csvs.push(std::fs::read(out.join("lsfc_vs_spacing.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn seed_override_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_LSFC);
    let mut csvs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(format!("s{seed}"));
        let res = csi_sim(&["run", &cfg, "--out", out.to_str().unwrap(), "--seed", seed, "--no-plot"]);
        assert!(res.status.success());
        csvs.push(std::fs::read_to_string(out.join("lsfc_vs_spacing.csv")).unwrap());
    }
    assert_ne!(csvs[0], csvs[1]);
}

#[test]
fn check_accepts_shipped_configs() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let res = csi_sim(&["check", path.to_str().unwrap()]);
            assert!(res.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&res.stderr));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn unknown_scenario_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "scenario = \"nope\"\n");
    let res = csi_sim(&["check", &cfg]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn every_invalid_field_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let body = "scenario = \"lsfc_vs_m\"\nn_trials = 0\nantenna_counts = [0]\n";
    let cfg = write_config(dir.path(), "bad.toml", body);
    let res = csi_sim(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("n_trials"), "{stderr}");
    assert!(stderr.contains("antenna_counts"), "{stderr}");
}

#[test]
fn invalid_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_LSFC);
    let res = csi_sim(&["run", &cfg, "--trials", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn missing_file_exits_with_config_code() {
    let res = csi_sim(&["check", "/nonexistent/experiment.toml"]);
    assert_eq!(res.status.code(), Some(2));
}
