//! CLI behavior: the golden fringe run, config diagnostics, exit codes,
//! canonical round-trips of the shipped configs, and flag semantics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use dicke_cli::config::validate_config;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dicke")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs")
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(bin())
        .args(["--config", config.to_str().unwrap(), "--out"])
        .arg(out)
        .args(extra)
        .output()
        .expect("spawn dicke")
}

fn run_text(text: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg_path = out.join("config.toml");
    fs::create_dir_all(out).unwrap();
    fs::write(&cfg_path, text).unwrap();
    run_config(&cfg_path, out, extra)
}

#[test]
fn golden_fringe_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = configs_dir().join("fringe_css100.toml");
    let out = run_config(&config, tmp.path(), &["--quiet"]);
    assert!(out.status.success());
    let produced = fs::read_to_string(tmp.path().join("fringe_css100.csv")).unwrap();

    // Oracle check: the mean_signal column is (N/2) cos(phi) to 1e-9.
    for line in produced.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let expected = 50.0 * cols[0].cos();
        assert!(
            (cols[1] - expected).abs() < 1e-9,
            "phi = {}: {} vs {expected}",
            cols[0],
            cols[1]
        );
    }

    // Frozen reference: byte-identical with the stored golden file.
    let golden = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fringe_css100.csv"),
    )
    .unwrap();
    assert_eq!(produced, golden, "golden fringe output drifted");
}

#[test]
fn empty_config_reports_missing_scenario() {
    match validate_config("") {
        Err(diags) => {
            assert!(diags.iter().any(|d| d.message.contains("scenario missing")));
        }
        Ok(_) => panic!("empty config validated"),
    }
}

#[test]
fn diagnostics_are_collected_not_first_error_only() {
    let text = r#"
scenario = "fringe-scan"
output = "x.csv"
typo_key = 1

[state]
kind = "css"
n_atoms = -5
polar = 0.1
azimuth = 0.0

[scan]
parameter = "phi"
start = 0.0
stop = 1.0
points = 1
"#;
    let diags = validate_config(text).unwrap_err();
    let text_of = |needle: &str| diags.iter().any(|d| format!("{d}").contains(needle));
    assert!(diags.len() >= 3, "wanted several diagnostics, got {diags:?}");
    assert!(text_of("typo_key"));
    assert!(text_of("n_atoms"));
    assert!(text_of("points"));
}

#[test]
fn exit_codes_match_error_classes() {
    let tmp = tempfile::tempdir().unwrap();

    // 2: config error.
    let out = run_text("scenario = \"unknown-thing\"\n", &tmp.path().join("a"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));

    // 3: physics/domain error, naming the operation (zero mean spin cannot
    // be oriented in an oat-scan).
    let physics = r#"
scenario = "oat-scan"
output = "oat.csv"

[state]
kind = "dicke"
n_atoms = 20
m = 0.0

[scan]
parameter = "mu"
start = 0.01
stop = 0.05
points = 3
"#;
    let out = run_text(physics, &tmp.path().join("b"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimally_orient"));

    // 4: I/O error.
    let out = Command::new(bin())
        .args(["--config", "/nonexistent/nowhere.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));

    // 2: command-line misuse (missing --config) via clap.
    let out = Command::new(bin()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_atom_count_names_the_field() {
    let text = r#"
scenario = "clock"
output = "c.out"

[clock]
omega0 = 1.0
T = 1.0
T_C = 1.0
tau = 1.0
n_atoms = -3
xi = 1.0
"#;
    let diags = validate_config(text).unwrap_err();
    assert!(diags.iter().any(|d| d.path.contains("n_atoms")));
}

#[test]
fn shipped_configs_round_trip_to_canonical_form() {
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let cfg = validate_config(&text)
            .unwrap_or_else(|d| panic!("{} failed to validate: {d:?}", path.display()));
        let canonical = cfg.to_toml_string();
        let cfg2 = validate_config(&canonical)
            .unwrap_or_else(|d| panic!("{} canonical form invalid: {d:?}", path.display()));
        assert_eq!(cfg, cfg2, "{} round-trip changed the config", path.display());
        assert_eq!(
            canonical,
            cfg2.to_toml_string(),
            "{} canonical form is not a fixed point",
            path.display()
        );
    }
}

#[test]
fn shipped_configs_run_within_budget() {
    let tmp = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let out_dir = tmp.path().join(path.file_stem().unwrap());
        let start = Instant::now();
        let out = run_config(&path, &out_dir, &["--quiet"]);
        let elapsed = start.elapsed().as_secs_f64();
        assert!(out.status.success(), "{} failed", path.display());
        assert!(
            elapsed < 10.0,
            "{} took {elapsed:.1} s (budget 10 s)",
            path.display()
        );
        // Quiet runs print nothing.
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn seed_flag_overrides_config_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
scenario = "qnd-demo"
seed = 1
output = "q.csv"

[state]
kind = "css"
n_atoms = 40
polar = 1.5707963267948966
azimuth = 0.0

[qnd]
sigma = 3.0

[measurement]
shots = 16
"#;
    let a_dir = tmp.path().join("a");
    let out = run_text(text, &a_dir, &[]);
    assert!(out.status.success());
    // Progress lines appear without --quiet.
    assert!(String::from_utf8_lossy(&out.stdout).contains("wrote"));
    let a = fs::read_to_string(a_dir.join("q.csv")).unwrap();

    let b_dir = tmp.path().join("b");
    let out = run_text(text, &b_dir, &["--seed", "1"]);
    assert!(out.status.success());
    let b = fs::read_to_string(b_dir.join("q.csv")).unwrap();
    assert_eq!(a, b, "same seed must reproduce");

    let c_dir = tmp.path().join("c");
    let out = run_text(text, &c_dir, &["--seed", "2"]);
    assert!(out.status.success());
    let c = fs::read_to_string(c_dir.join("q.csv")).unwrap();
    assert_ne!(a, c, "--seed must override the config seed");
}

#[test]
fn checkpoint_round_trips_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    // First run writes a checkpoint of the prepared state.
    let first = r#"
scenario = "wigner"
output = "w1.csv"
checkpoint = "state.toml"

[state]
kind = "css"
n_atoms = 12
polar = 0.9
azimuth = 0.3

[[sequence]]
type = "one_axis_twist"
mu = 0.15

[grid]
n_polar = 16
n_azimuth = 16
"#;
    let dir = tmp.path().join("first");
    assert!(run_text(first, &dir, &["--quiet"]).status.success());
    assert!(dir.join("state.toml").exists());

    // Second run loads the checkpoint and must reproduce the same grid.
    let second = format!(
        r#"
scenario = "wigner"
output = "w2.csv"

[state]
kind = "checkpoint"
path = "{}"

[grid]
n_polar = 16
n_azimuth = 16
"#,
        dir.join("state.toml").display()
    );
    let dir2 = tmp.path().join("second");
    assert!(run_text(&second, &dir2, &["--quiet"]).status.success());
    let w1 = fs::read_to_string(dir.join("w1.csv")).unwrap();
    let w2 = fs::read_to_string(dir2.join("w2.csv")).unwrap();
    assert_eq!(w1, w2, "checkpoint reload changed the state");
}

#[test]
fn readout_noise_element_feeds_the_fringe_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#"
scenario = "fringe-scan"
output = "f.csv"

[state]
kind = "css"
n_atoms = 50
polar = 3.141592653589793
azimuth = 0.0

[scan]
parameter = "phi"
start = 1.4
stop = 1.6
points = 3
"#;
    let noisy = format!("{base}\n[[sequence]]\ntype = \"readout_noise\"\nsigma_det = 4.0\n");
    let a = run_text(base, &tmp.path().join("clean"), &["--quiet"]);
    let b = run_text(&noisy, &tmp.path().join("noisy"), &["--quiet"]);
    assert!(a.status.success() && b.status.success());
    let clean = fs::read_to_string(tmp.path().join("clean/f.csv")).unwrap();
    let noisy = fs::read_to_string(tmp.path().join("noisy/f.csv")).unwrap();
    let std_of = |text: &str| -> f64 {
        text.lines()
            .nth(2)
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .parse()
            .unwrap()
    };
    // Var -> Var + sigma^2 at the phi = 1.5 row.
    let v_clean = std_of(&clean).powi(2);
    let v_noisy = std_of(&noisy).powi(2);
    assert!((v_noisy - v_clean - 16.0).abs() < 1e-6);
}
