use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use trs_core::linear_systems::{replay, GaugeTransform, LinearSystem};
use trs_core::series_core::Json;

const RAMIFIED: &str = r#"{"n": 2, "p": 2, "A": {"n": 2, "trunc": 12, "coeffs": [[["0", "0"], ["1", "0"]], [["0", "1"], ["0", "0"]]]}}"#;

const IRRATIONAL: &str = r#"{"n": 3, "p": 1, "A": {"n": 3, "trunc": 8, "coeffs": [
  [["1", "1", "0"], ["0", "1", "0"], ["0", "0", "-1"]],
  [["1", "2", "0"], ["3", "4", "1"], ["1", "1", "1"]]
]}}"#;

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(format!("{name}.json"))
}

fn trs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trs")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn file_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn input(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn ramified_system_reduces_and_chain_replays() {
    let dir = TempDir::new().unwrap();
    let sys = input(&dir, "sys.json", RAMIFIED);
    let out = dir.path().join("out");
    let o = trs(&["reduce-linear", &sys, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "trs");
    assert_eq!(v["trs"]["q"], 3);
    let chain: Vec<GaugeTransform> = Json::from_json(&file_json(&out, "chain.json")["chain"]).unwrap();
    let s = LinearSystem::from_json(&serde_json::from_str(RAMIFIED).unwrap()).unwrap();
    assert!(replay(&s, &chain).is_ok());
    assert!(chain.iter().any(|t| matches!(t, GaugeTransform::Ramification { r: 2 })));
    assert_eq!(file_json(&out, "form.json")["config"]["command"], "reduce-linear");
}

#[test]
fn irrational_spectrum_exits_undecidable() {
    let dir = TempDir::new().unwrap();
    let sys = input(&dir, "sys.json", IRRATIONAL);
    let o = trs(&["reduce-linear", &sys]);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("reduce_linear_full"));
}

#[test]
fn malformed_input_exits_with_parse_code() {
    let dir = TempDir::new().unwrap();
    let bad = input(&dir, "bad.json", "{\"n\": 2,");
    assert_eq!(code(&trs(&["reduce-linear", &bad])), 2);
    let unknown = input(&dir, "unknown.json", "{\"hello\": 1}");
    assert_eq!(code(&trs(&["verify", &unknown])), 2);
    let euler = model("euler");
    assert_eq!(code(&trs(&["reduce-linear", euler.to_str().unwrap()])), 2);
    assert_eq!(code(&trs(&["trajectory", euler.to_str().unwrap(), "--window", "0.1"])), 2);
    assert_eq!(code(&trs(&["basin", model("basin_u1").to_str().unwrap(), "--horn", "1.5:1:0.05"])), 2);
    assert_eq!(code(&trs(&["reduce-linear", "/nonexistent/sys.json"])), 2);
}

#[test]
fn precondition_failures_exit_three() {
    // the Euler curve is not y = 0
    let o = trs(&["basin", model("euler").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let dir = TempDir::new().unwrap();
    let mut couple: Value = serde_json::from_str(&std::fs::read_to_string(model("euler")).unwrap()).unwrap();
    couple["curve"]["gamma_y"][0]["coeffs"][3] = Value::from("3");
    let broken = input(&dir, "broken.json", &couple.to_string());
    assert_eq!(code(&trs(&["reduce-vf", &broken])), 3);
}

#[test]
fn euler_trajectory_is_certified() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("traj");
    let o = trs(&["trajectory", model("euler").to_str().unwrap(), "--N", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["report"]["contact"]["certified"], true);
    assert_eq!(v["report"]["contact"]["N"], 6);
    assert_eq!(v["report"]["straightened"], false);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("x,y1\n"));
    assert!(csv.lines().count() > 100);
    assert_eq!(file_json(&out, "contact.json"), v);
}

#[test]
fn tiny_step_budget_exits_four() {
    let o = trs(&["trajectory", model("euler").to_str().unwrap(), "--N", "6", "--fuel", "10"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rotation_model_is_straightened() {
    let o = trs(&["trajectory", model("rotation").to_str().unwrap(), "--contact", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["report"]["straightened"], true);
}

#[test]
fn euler_reduction_is_deterministic() {
    let euler = model("euler");
    let args = ["reduce-vf", euler.to_str().unwrap(), "--N", "2"];
    let (a, b) = (trs(&args), trs(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["form"]["q"], 1);
    assert_eq!(v["form"]["C"], serde_json::json!([["-5/1"]]));
}

#[test]
fn basin_reports_expected_dimension() {
    let o = trs(&["basin", model("basin_u1").to_str().unwrap(), "--seeds", "16"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["report"]["expected_dimension"], 2);
    assert_eq!(v["report"]["probe"]["dimension"], 2);
}

#[test]
fn verify_passes_on_every_model() {
    for name in ["euler", "rotation", "basin_u0", "basin_u1", "basin_u2"] {
        let o = trs(&["verify", model(name).to_str().unwrap(), "--N", "2", "--seeds", "16"]);
        assert_eq!(code(&o), 0, "{name}");
        let v = stdout_json(&o);
        assert_eq!(v["report"]["all_pass"], true, "{name}: {v}");
        let statuses: Vec<&str> = v["report"]["checks"].as_array().unwrap().iter().map(|c| c["status"].as_str().unwrap()).collect();
        assert!(statuses.contains(&"pass"));
    }
}

#[test]
fn verify_on_linear_system_checks_replay() {
    let dir = TempDir::new().unwrap();
    let sys = input(&dir, "sys.json", RAMIFIED);
    let v = stdout_json(&trs(&["verify", &sys]));
    let replay = v["report"]["checks"].as_array().unwrap().iter().find(|c| c["name"] == "replay").unwrap().clone();
    assert_eq!(replay["status"], "pass");
}
