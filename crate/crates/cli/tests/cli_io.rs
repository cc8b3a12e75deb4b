//! Command-line behavior: exit codes, config files, channel loading.

use std::process::Command;

fn raclab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_raclab"))
}

#[test]
fn missing_subcommand_exits_2_with_usage() {
    let out = raclab().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn unknown_config_field_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"task": "stats", "bogus_field": 1}"#).unwrap();
    let out = raclab().args(["stats", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_task_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"task": "simulate"}"#).unwrap();
    let out = raclab().args(["stats", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"task": "adder-stats", "delta": 0.5, "kmax": 3}"#,
    )
    .unwrap();
    let out_cfg = dir.path().join("from_config.csv");
    let s = raclab()
        .args(["adder-stats", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_cfg)
        .status()
        .unwrap();
    assert!(s.success());
    let text = std::fs::read_to_string(&out_cfg).unwrap();
    assert_eq!(text.lines().count(), 2 + 3, "kmax from config");

    let out_flag = dir.path().join("from_flag.csv");
    let s = raclab()
        .args(["adder-stats", "--config"])
        .arg(&cfg)
        .args(["--kmax", "6", "--out"])
        .arg(&out_flag)
        .status()
        .unwrap();
    assert!(s.success());
    let text = std::fs::read_to_string(&out_flag).unwrap();
    assert_eq!(text.lines().count(), 2 + 6, "flag overrides config");
}

#[test]
fn infeasible_channel_exits_3() {
    // a = b = 1/2 carries no information: blocklength solving must fail
    let out = raclab()
        .args([
            "blocklengths", "--channel", "binary", "--a", "0.5", "--b", "0.5", "--logm", "100",
            "--eps", "1e-3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_fails_on_degenerate_channel() {
    let out = raclab()
        .args(["verify", "--channel", "binary", "--a", "0.5", "--b", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL"), "{text}");
}

#[test]
fn verify_passes_on_adder() {
    let out = raclab()
        .args(["verify", "--channel", "adder", "--delta", "0.2", "--K", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("all checks passed"));
}

#[test]
fn channel_json_file_round_trips_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("family.json");
    let ch = raclab_core::channel::make_adder_erasure(2, 0.2).unwrap();
    std::fs::write(&path, ch.to_json().unwrap()).unwrap();
    let csv = dir.path().join("stats.csv");
    let s = raclab()
        .args(["stats", "--channel", "file", "--channel-file"])
        .arg(&path)
        .args(["--out"])
        .arg(&csv)
        .status()
        .unwrap();
    assert!(s.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# units:"));
    assert!(text.lines().nth(1).unwrap().starts_with("k,I_k_nats"));
}

#[test]
fn rate_region_csv_contains_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("region.csv");
    let s = raclab()
        .args([
            "rate-region", "--a", "0.11", "--b", "0.11", "--logm", "1000", "--eps", "1e-3",
            "--grid", "0.05",
        ])
        .args(["--out"])
        .arg(&csv)
        .status()
        .unwrap();
    assert!(s.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("5.00000000000e-1,"))
        .expect("p = 0.5 row present");
    assert!(row.contains(",2290,4399,"), "{row}");
    assert!(row.ends_with(",1"), "p = 0.5 must be dominant: {row}");
}
