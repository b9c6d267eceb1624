use std::path::PathBuf;
use std::process::{Command, Output};

fn mmcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmcast")).args(args).output().unwrap()
}

fn small_config() -> PathBuf {
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/highway.cfg"))
        .unwrap()
        .replace("vehicle_count=100", "vehicle_count=15");
    let path = std::env::temp_dir().join(format!("mmcast-cli-{}.cfg", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_prints_one_csv_row() {
    let cfg = small_config();
    let out = mmcast(&["simulate", "--config", cfg.to_str().unwrap(), "--scheme", "proposed", "--seed", "4", "--audit"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "scheme,seed,config_hash,total_slots,t_v2i,t_v2v,throughput_bps,energy_j,unserved,partial,audit"
    );
    assert!(lines[1].starts_with("proposed,4,") && lines[1].ends_with(",pass"));
}

#[test]
fn config_problems_exit_with_one() {
    let missing = mmcast(&["simulate", "--config", "/nonexistent.cfg", "--scheme", "fcfs", "--seed", "1"]);
    assert_eq!(missing.status.code(), Some(1));
    let cfg = small_config();
    let bad_scheme = mmcast(&["simulate", "--config", cfg.to_str().unwrap(), "--scheme", "nope", "--seed", "1"]);
    assert_eq!(bad_scheme.status.code(), Some(1));
    let out = std::env::temp_dir().join("mmcast-cli-unused.csv");
    let bad_axis = mmcast(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--axis", "warp", "--values", "1", "--schemes", "fcfs",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(bad_axis.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&bad_axis.stderr);
    assert!(stderr.contains("valid keys") && stderr.contains("sinr_threshold_db"), "{stderr}");
}

#[test]
fn sweep_writes_nested_rows() {
    let cfg = small_config();
    let out = std::env::temp_dir().join(format!("mmcast-sweep-{}.csv", std::process::id()));
    let status = mmcast(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--axis", "sinr_threshold_db", "--values", "10,20",
        "--schemes", "proposed,noncoop", "--replicas", "2", "--base-seed", "5", "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    let keys: Vec<(&str, &str, &str, &str)> = rows.iter().map(|r| (r[1], r[2], r[3], r[4])).collect();
    assert_eq!(keys[0], ("10", "proposed", "0", "5"));
    assert_eq!(keys[3], ("10", "noncoop", "1", "6"));
    assert_eq!(keys[7], ("20", "noncoop", "1", "6"));
    // the RSU-only scheme ignores the V2V threshold
    assert_eq!(rows[2][5], rows[6][5]);
}

#[test]
fn default_config_round_trips_through_simulate() {
    let out = mmcast(&["default-config"]);
    assert!(out.status.success());
    let path = std::env::temp_dir().join(format!("mmcast-default-{}.cfg", std::process::id()));
    let text = String::from_utf8(out.stdout).unwrap().replace("vehicle_count=100", "vehicle_count=5");
    std::fs::write(&path, text).unwrap();
    let run = mmcast(&["simulate", "--config", path.to_str().unwrap(), "--scheme", "serial-tdma", "--seed", "1"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8(run.stdout).unwrap().trim_end().ends_with(",skipped"));
}
