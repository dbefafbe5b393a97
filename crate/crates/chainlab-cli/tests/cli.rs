//! Exit-code contract of the runner: 0 on PASS/complete, 2 on FAIL-type
//! reports, 1 on usage/config errors.

use std::path::PathBuf;
use std::process::Command;

fn chainlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_chainlab"))
        .args(args)
        .output()
        .expect("spawn chainlab")
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("chainlab_cli_{}_{}", std::process::id(), name))
}

fn write_cfg(name: &str, body: &str) -> PathBuf {
    let p = tmp(name).with_extension("toml");
    std::fs::write(&p, body).unwrap();
    p
}

const GOOD_ROTOR: &str = r#"
[chain]
kind = "rotator"
n = 2

[[chain.interaction]]
kind = "trigpoly"
c0 = 2.0
cos = [1.0]

[run]
seed = 3

[calibrate]
samples_per_decade = 300
"#;

#[test]
fn validate_pass_is_exit_zero() {
    let cfg = write_cfg("ok", GOOD_ROTOR);
    let out_dir = tmp("ok_out");
    let out = chainlab(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("validate.csv").exists());
    assert!(out_dir.join("validate_summary.txt").exists());
    std::fs::remove_dir_all(out_dir).ok();
}

#[test]
fn degenerate_potential_fails_with_exit_two() {
    // 2 + cos^3 x has a point where V' = V'' = 0.
    let cfg = write_cfg(
        "degenerate",
        r#"
[chain]
kind = "rotator"
n = 2

[[chain.interaction]]
kind = "trigpoly"
c0 = 2.0
cos = [0.75, 0.0, 0.25]
"#,
    );
    let out_dir = tmp("degenerate_out");
    let out = chainlab(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(out_dir).ok();
}

#[test]
fn bad_config_is_exit_one() {
    let cfg = write_cfg("bad", "[chain]\nkind = \"rotator\"\n"); // missing fields
    let out = chainlab(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let missing = tmp("nope").with_extension("toml");
    let out = chainlab(&["validate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tiny_fixed_coefficients_fail_calibration_with_exit_two() {
    let cfg = write_cfg(
        "fixed_a",
        r#"
[chain]
kind = "rotator"
n = 2

[[chain.interaction]]
kind = "trigpoly"
c0 = 2.0
cos = [1.0]

[calibrate]
fixed_a = [1.0, 1.0, 1.0]
max_rounds = 0
samples_per_decade = 300
"#,
    );
    let out_dir = tmp("fixed_a_out");
    let out = chainlab(&[
        "calibrate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let summary = std::fs::read_to_string(out_dir.join("calibrate_summary.txt")).unwrap();
    assert!(summary.contains("pass: false"));
    std::fs::remove_dir_all(out_dir).ok();
}

#[test]
fn empty_decay_window_reports_rows_and_exits_zero() {
    let cfg = write_cfg(
        "empty_window",
        r#"
[chain]
kind = "rotator"
n = 2

[[chain.interaction]]
kind = "trigpoly"
c0 = 2.0
cos = [1.0]

[calibrate]
samples_per_decade = 300

[decay]
h0_list = [30.0]
epsilon = 0.01
ensemble = 2
families = ["fast_rotor"]
"#,
    );
    let out_dir = tmp("empty_window_out");
    let out = chainlab(&[
        "decay-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("decay.csv")).unwrap();
    assert!(csv.lines().skip(2).all(|l| l.contains("true")), "window_empty rows expected");
    std::fs::remove_dir_all(out_dir).ok();
}

#[test]
fn corrupted_phi_tables_fail_certification_with_exit_two() {
    let cfg_body = r#"
[chain]
kind = "oscillator"
n = 2

[[chain.interaction]]
kind = "polynomial"
coeffs = [0.0, 0.0, 0.5]

[[chain.pinning]]
kind = "polynomial"
coeffs = [0.0, 0.0, 0.5]

[matrosov]
w_max = 100.0
levels_per_decade = 16
budget_per_level = 64
certify_budget = 400
"#;
    let cfg = write_cfg("matrosov_ok", cfg_body);
    let out_dir = tmp("matrosov_out");
    let out = chainlab(&[
        "matrosov-build",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = chainlab(&[
        "matrosov-certify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let cfg_bad = write_cfg(
        "matrosov_bad",
        &cfg_body.replace("certify_budget = 400", "certify_budget = 400\ncorrupt_phi = 100.0"),
    );
    let out = chainlab(&[
        "matrosov-certify",
        "--config",
        cfg_bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(out_dir).ok();
}

#[test]
fn seed_flag_overrides_config_seed() {
    let cfg = write_cfg("seed_override", GOOD_ROTOR);
    let out_a = tmp("seed_a");
    let out_b = tmp("seed_b");
    for (dir, seed) in [(&out_a, "3"), (&out_b, "4")] {
        let out = chainlab(&[
            "calibrate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read_to_string(out_a.join("calibrate_decades.csv")).unwrap();
    let b = std::fs::read_to_string(out_b.join("calibrate_decades.csv")).unwrap();
    assert_ne!(a, b, "different seeds must change sampled decade maxima");
    std::fs::remove_dir_all(out_a).ok();
    std::fs::remove_dir_all(out_b).ok();
}
