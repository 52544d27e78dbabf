use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn routemix(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_routemix")).args(args).current_dir(cwd).output().unwrap()
}

fn json(out: &[u8]) -> serde_json::Value {
    serde_json::from_slice(out).unwrap()
}

const SMOKE: &str = "\
repetitions = 2

[population]
size = 12
av_count = 4

[phases]
shock_start = 3
adapt_start = 5
total_episodes = 8

[summary]
window = 2
";

#[test]
fn generate_run_summarize_chart() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("smoke.toml"), SMOKE).unwrap();

    let out = routemix(&["gen-net", "--out", "inputs", "--seed", "3"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out.stdout)["edges"], 48);

    let out = routemix(&["gen-paths", "--network", "inputs/network.csv", "--out", "inputs"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let routes = fs::read_to_string(d.join("inputs/routes.csv")).unwrap();
    assert_eq!(routes.lines().count(), 1 + 4 * 3);

    let out = routemix(&["gen-population", "--config", "smoke.toml", "--seed", "5", "--out", "inputs"], d);
    assert!(out.status.success());
    let pop = fs::read_to_string(d.join("inputs/population.csv")).unwrap();
    assert_eq!(pop.lines().count(), 13);
    assert_eq!(pop.matches(",true").count(), 4);

    let out = routemix(
        &["run", "--config", "smoke.toml", "--behavior", "malicious", "--seed", "5", "--out", "run"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out.stdout);
    assert_eq!(v["behavior"], "malicious");
    assert!(v["summary"]["av_pct"].is_number());
    // The sampled population of repetition 0 is the one gen-population wrote.
    assert_eq!(fs::read_to_string(d.join("run/rep_0/population.csv")).unwrap(), pop);

    let out = routemix(&["summarize", "--run", "run", "--out", "report"], d);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(d.join("report/summary.csv")).unwrap(),
        fs::read_to_string(d.join("run/summary.csv")).unwrap()
    );

    let out = routemix(&["charts", "--run", "run", "--out", "charts"], d);
    assert!(out.status.success());
    assert_eq!(json(&out.stdout)["charts"].as_array().unwrap().len(), 7);
    assert!(fs::read_to_string(d.join("charts/travel_time.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn custom_weights_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("smoke.toml"), SMOKE).unwrap();
    let out = routemix(
        &["run", "--config", "smoke.toml", "--phi", "1", "0", "-0.5", "0", "--repetitions", "1", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("o/manifest.json")).unwrap();
    assert!(manifest.contains("\"custom\""));
}

#[test]
fn errors_are_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = routemix(&["run", "--behavior", "sneaky", "--out", "x"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim().lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert!(v["error"].as_str().unwrap().contains("sneaky"));

    fs::write(dir.path().join("bad.toml"), "[phases]\nshock_start = 9\nadapt_start = 4\n").unwrap();
    let out = routemix(&["run", "--config", "bad.toml", "--out", "x"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("shock_start"));

    let out = routemix(&["summarize", "--run", "missing", "--out", "x"], dir.path());
    assert!(!out.status.success());
}
