use std::process::{Command, Output};

fn zldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zldp")).args(args).output().expect("spawn zldp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Rows of the CSV table `name` in stdout, header first.
fn table(out: &str, name: &str) -> Vec<Vec<String>> {
    let marker = format!("# {name}\n");
    let start = out.find(&marker).unwrap_or_else(|| panic!("no table {name} in\n{out}")) + marker.len();
    out[start..]
        .lines()
        .take_while(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn paper_constraints_all_pass() {
    let o = zldp(&["ladder", "constraints", "--alpha", "1.0", "--profile", "paper"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = table(&stdout(&o), "ladder_constraints");
    let passed = rows[0].iter().position(|h| h == "passed").unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows[1..].iter().all(|r| r[passed] == "true"), "{rows:?}");
}

#[test]
fn tail_has_one_row_per_alpha() {
    let o = zldp(&["experiment", "tail", "--T", "1e6", "--alpha", "0.5,1.0,1.5", "--samples", "100000", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = table(&stdout(&o), "tail");
    assert_eq!(rows.len(), 4, "{rows:?}");
    assert_eq!(rows[0][0], "experiment");
}

#[test]
fn usage_errors_exit_two_and_help_exits_zero() {
    assert_eq!(zldp(&["sieve", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(zldp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(zldp(&[]).status.code(), Some(2));
    let h = zldp(&["--help"]);
    assert_eq!(h.status.code(), Some(0));
    assert!(stdout(&h).contains("experiment"));
}

#[test]
fn missing_config_file_exits_two() {
    let o = zldp(&["sieve", "--config", "/nonexistent/zldp.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/zldp.json"), "{}", stderr(&o));
}

#[test]
fn config_errors_are_all_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"ladder.alpha": 2.5, "experiment.theta": 7, "bogus": 1}"#).unwrap();
    let o = zldp(&["ladder", "build", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().filter(|l| l.starts_with("zldp: config:")).count(), 3, "{err}");
    assert!(err.contains("ladder.alpha") && err.contains("(0, 2)"), "{err}");
}

#[test]
fn paper_profile_at_a_million_warns_and_suggests_desk() {
    let o = zldp(&["ladder", "constraints", "--profile", "paper", "--T", "1e6"]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    assert!(err.contains("warning") && err.contains("desk"), "{err}");
}

#[test]
fn sieve_above_the_cap_is_a_resource_error() {
    let o = zldp(&["sieve", "--limit", "100000000000"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn out_directory_gets_csv_and_checksummed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = zldp(&["ladder", "build", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], serde_json::json!(["ladder", "build"]));
    assert_eq!(manifest["profile"], "desk");
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["file"] == "ladder.csv"));
    assert!(outputs.iter().any(|o| o["file"] == "ladder.json"));
    let csv = std::fs::read_to_string(dir.path().join("ladder.csv")).unwrap();
    assert!(csv.starts_with("l,t_l,width,iter_log,lower,upper\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn manifest_for_another_command_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(zldp(&["ladder", "build", "--out", d]).status.code(), Some(0));
    let m = dir.path().join("manifest.json");
    let o = zldp(&["ladder", "constraints", "--manifest", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("manifest"));
}
