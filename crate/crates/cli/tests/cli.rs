use std::path::Path;
use std::process::{Command, Output};

use marc_sim::report::{parse_csv, parse_json};

fn marc_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marc-sim")).args(args).env_remove("MARC_SIM_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const QUICK: &[&str] =
    &["--snr-start", "0", "--snr-stop", "4", "--packets", "8", "--packet-len", "64", "--min-errors", "0"];

fn quick(extra: &[&str]) -> Vec<String> {
    QUICK.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(extra: &[&str]) -> Output {
    let args = quick(extra);
    marc_sim(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let o = marc_sim(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["--preset", "fig8", "--pth", "1.5"],
        vec!["--preset", "fig8", "--pth", "-0.1"],
        vec!["--scheme", "teleport"],
        vec!["--scheme", "adaptive"],
        vec!["--scheme", "df-nc", "--code", "none"],
        vec!["--scheme", "qdf-nc", "--rx-mode", "superposed"],
        vec!["--scheme", "p2p", "--code", "6:23"],
        vec!["--scheme", "p2p", "--preset", "fig6"],
    ] {
        let o = marc_sim(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_1() {
    let o = run(&["--scheme", "p2p", "--out", "/nonexistent-dir/out.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csv_to_stdout() {
    let o = run(&["--scheme", "dmnc", "--mod", "qam4"]);
    assert!(o.status.success());
    let rows = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.scheme == "dmnc" && r.packets == 8));
    assert_eq!(rows.iter().map(|r| r.snr_db).collect::<Vec<_>>(), [0.0, 2.0, 4.0]);
}

#[test]
fn json_output_and_direct_rows() {
    let o = run(&["--scheme", "df-nc", "--format", "json", "--report-direct"]);
    assert!(o.status.success());
    let rows = parse_json(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1].scheme, "df-nc/direct-only");
}

#[test]
fn seed_from_environment_matches_flag() {
    let args = quick(&["--scheme", "analog-nc", "--channel", "rayleigh"]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_marc-sim")).args(&args).env("MARC_SIM_SEED", "7").output().unwrap();
    let flagged = run(&["--scheme", "analog-nc", "--channel", "rayleigh", "--seed", "7"]);
    let other = run(&["--scheme", "analog-nc", "--channel", "rayleigh", "--seed", "8"]);
    assert_eq!(with_env.stdout, flagged.stdout);
    assert_ne!(flagged.stdout, other.stdout);
}

#[test]
fn manifest_replay_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig8.csv");
    let o =
        run(&["--preset", "fig8", "--pth", "0.3", "--seed", "3", "--doppler", "100", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest = dir.path().join("fig8.csv.manifest.json");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(json["seed"], 3);
    assert_eq!(json["configs"].as_array().unwrap().len(), 3);
    assert_eq!(json["configs"][0]["channel"]["doppler_hz"], 100.0);
    assert!(json["timestamp_unix"].as_u64().unwrap() > 0);

    let replay = dir.path().join("replay.csv");
    let o = marc_sim(&["--from-manifest", manifest.to_str().unwrap(), "--out", replay.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&replay).unwrap());
}

#[test]
fn missing_manifest_exits_1() {
    let o = marc_sim(&["--from-manifest", "/nonexistent-dir/m.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new("/nonexistent-dir").exists());
}
