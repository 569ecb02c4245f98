use std::path::Path;
use std::process::Command;

use gaplab::certificate::rate_schedule_log10;
use gaplab::Flavor;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaplab"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("gaplab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p
}

#[test]
fn rate_table_rows_match_library() {
    let dir = tmp("rate");
    let cfg = write_config(&dir, r#"{"flavor": "unitary", "n_grid": [3, 6, 9]}"#);
    let st = bin().args(["--subcommand", "rate-table", "--out"]).arg(&dir).arg("--config").arg(&cfg).status().unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(dir.join("rate-table/results.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for (row, x) in rows.iter().zip([3.0, 6.0, 9.0]) {
        let want = rate_schedule_log10(Flavor::Unitary, x, 2).unwrap();
        assert_eq!(row[4].parse::<f64>().unwrap(), want.kappa);
        assert_eq!(row[5].parse::<f64>().unwrap(), want.s_min);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("rate-table/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], true);
    assert!(manifest["wall_time_s"].is_number());
}

#[test]
fn linearize_verify_default_passes_and_is_reproducible() {
    let a = tmp("lin-a");
    let b = tmp("lin-b");
    for d in [&a, &b] {
        let st = bin().args(["--subcommand", "linearize-verify", "--threads", "1", "--out"]).arg(d).status().unwrap();
        assert!(st.success());
    }
    let ca = std::fs::read(a.join("linearize-verify/results.csv")).unwrap();
    let cb = std::fs::read(b.join("linearize-verify/results.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert_eq!(text.lines().count(), 102);
    let max = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(10).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(max <= 1e-7);
}

#[test]
fn seed_flag_changes_the_seed_list() {
    let dir = tmp("seed");
    let st = bin().args(["--subcommand", "lattice-grow", "--seed", "9", "--out"]).arg(&dir).status().unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(dir.join("lattice-grow/results.csv")).unwrap();
    assert!(text.lines().next().unwrap().ends_with("seeds=[9]"));
}

#[test]
fn unknown_subcommand_fails() {
    let out = bin().args(["--subcommand", "frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("subcommand"));
}

#[test]
fn invalid_config_fails_with_stage() {
    let dir = tmp("bad");
    let cfg = write_config(&dir, r#"{"seeds": []}"#);
    let out = bin().args(["--subcommand", "rate-table", "--config"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
    let cfg = write_config(&dir, r#"{"no_such_field": 1}"#);
    let out = bin().args(["--subcommand", "rate-table", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_assertion_exits_one() {
    let dir = tmp("fail");
    // Above the growth window the slope leaves [1.6, 2.4].
    let cfg = write_config(&dir, r#"{"t_values": [0.5, 1.0], "kappa": 1.0, "c_geo": 0.0}"#);
    let out = bin().args(["--subcommand", "lattice-grow", "--config"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lattice-grow"));
}
