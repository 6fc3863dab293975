//! End-to-end runs of the `sgain` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sgain(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgain")).current_dir(dir).args(args).output().expect("spawn sgain")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

#[test]
fn chain_a_round_trip() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    for cmd in ["analyze", "certify", "simulate", "verify"] {
        let out = sgain(dir, &[cmd, "--scenario", "chain-a", "--out", "o"]);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let rep = read_json(&dir.join(format!("o/{cmd}.json")));
        assert_eq!(rep["schema"], "sgain/1");
        assert_eq!(rep["command"], cmd);
        assert_eq!(rep["exit_code"], 0);
    }
    let cert = read_json(&dir.join("o/certificate.json"));
    assert_eq!(cert["scenario"], "chain-a");
    let lam = cert["certificate"]["lambda_inf"].as_f64().unwrap();
    assert!((lam - 1.35).abs() < 1e-9, "λ∞ = {lam}");

    let sim = read_json(&dir.join("o/simulate.json"));
    let files = sim["body"]["trajectories"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let csv = f["file"].as_str().unwrap();
        let text = fs::read_to_string(dir.join("o").join(csv)).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "t,norm_p,V,u_norm", "{csv}");
        assert!(text.lines().count() > 100, "{csv}");
    }
}

#[test]
fn scenario_subcommand_maps_outcomes() {
    let tmp = TempDir::new().unwrap();
    let cases = [("chain-a", 0), ("counter-slow", 2), ("chain-fail", 3)];
    for (name, want) in cases {
        let out = sgain(tmp.path(), &["scenario", name, "--out", name]);
        assert_eq!(code(&out), want, "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn chain_fail_certify_exits_3() {
    let tmp = TempDir::new().unwrap();
    let out = sgain(tmp.path(), &["certify", "--scenario", "chain-fail", "--out", "o"]);
    assert_eq!(code(&out), 3);
    assert!(!tmp.path().join("o/certificate.json").exists());
}

#[test]
fn malformed_json_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{\"schema\": \"sgain/1\", \"scenario\": ");
    let out = sgain(tmp.path(), &["analyze", "--config", &cfg]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));
}

#[test]
fn unknown_field_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"schema":"sgain/1","scenario":"chain-a","sedd":3}"#);
    assert_eq!(code(&sgain(tmp.path(), &["analyze", "--config", &cfg])), 1);
}

#[test]
fn wrong_schema_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"schema":"sgain/0","scenario":"chain-a"}"#);
    let out = sgain(tmp.path(), &["analyze", "--config", &cfg]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
}

#[test]
fn unknown_scenario_exits_1() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&sgain(tmp.path(), &["analyze", "--scenario", "no-such-net"])), 1);
    assert_eq!(code(&sgain(tmp.path(), &["scenario", "no-such-net"])), 1);
}

#[test]
fn missing_target_exits_1() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&sgain(tmp.path(), &["certify"])), 1);
}

#[test]
fn bad_override_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg =
        write_config(tmp.path(), "c.json", r#"{"schema":"sgain/1","scenario":"chain-a","overrides":{"nope":1.0}}"#);
    assert_eq!(code(&sgain(tmp.path(), &["analyze", "--config", &cfg])), 1);
}

#[test]
fn corrupted_certificate_fails_verify() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&sgain(dir, &["certify", "--scenario", "chain-a", "--out", "o"])), 0);
    let mut cert = read_json(&dir.join("o/certificate.json"));
    let lam = cert["certificate"]["lambda_inf"].as_f64().unwrap();
    cert["certificate"]["lambda_inf"] = Value::from(lam * 10.0);
    fs::write(dir.join("bad.json"), serde_json::to_string_pretty(&cert).unwrap()).unwrap();

    let out = sgain(dir, &["verify", "--scenario", "chain-a", "--out", "o", "--certificate", "bad.json"]);
    assert_eq!(code(&out), 4);
    let rep = read_json(&dir.join("o/verify.json"));
    assert!(!rep["body"]["failed_checks"].as_array().unwrap().is_empty());
}

#[test]
fn certificate_for_other_scenario_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&sgain(dir, &["certify", "--scenario", "chain-a", "--out", "o"])), 0);
    let out = sgain(dir, &["verify", "--scenario", "step5", "--out", "o"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn decoupled_network_and_rho_override() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let plain = write_config(dir, "d.json", r#"{"schema":"sgain/1","scenario":"chain-a","overrides":{"b_off":0.0}}"#);
    assert_eq!(code(&sgain(dir, &["certify", "--config", &plain, "--out", "d"])), 0);
    let cert = read_json(&dir.join("d/certificate.json"))["certificate"].clone();
    assert_eq!(cert["bracket"]["upper"].as_f64().unwrap(), 0.0);
    let r = cert["r_tilde"].as_f64().unwrap();
    assert!(r > 0.0 && r <= 0.1, "r̃ = {r}");

    let tuned = write_config(
        dir,
        "r.json",
        r#"{"schema":"sgain/1","scenario":"chain-a","overrides":{"b_off":0.0},"analysis":{"rho":0.05}}"#,
    );
    assert_eq!(code(&sgain(dir, &["certify", "--config", &tuned, "--out", "r"])), 0);
    let cert = read_json(&dir.join("r/certificate.json"))["certificate"].clone();
    assert_eq!(cert["rho"].as_f64().unwrap(), 0.05);
    assert_eq!(code(&sgain(dir, &["verify", "--config", &tuned, "--out", "r"])), 0);
}

#[test]
fn seed_flag_is_recorded() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&sgain(tmp.path(), &["analyze", "--scenario", "traffic", "--seed", "9", "--out", "o"])), 0);
    assert_eq!(read_json(&tmp.path().join("o/analyze.json"))["seed"], 9);
}

#[test]
fn input_without_channels_exits_1() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"schema":"sgain/1","scenario":"chain-a","sim":{"input":{"kind":"geometric_profile","amplitude":1.0,"ratio":0.5}}}"#;
    let cfg = write_config(tmp.path(), "c.json", body);
    assert_eq!(code(&sgain(tmp.path(), &["simulate", "--config", &cfg])), 1);

    let body = r#"{"schema":"sgain/1","scenario":"chain-a","overrides":{"b_u":0.5},"sim":{"t_end":1.0,"input":{"kind":"geometric_profile","amplitude":1.0,"ratio":0.5}}}"#;
    let cfg = write_config(tmp.path(), "d.json", body);
    assert_eq!(code(&sgain(tmp.path(), &["simulate", "--config", &cfg, "--out", "o"])), 0);
    assert!(tmp.path().join("o/trajectory_forced.csv").exists());
}
