use std::path::Path;
use std::process::{Command, Output};

fn zeno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zeno"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_csv_schema() {
    let o = zeno(&["simulate", "--i0", "-0.1", "--N", "4", "--samples", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,q,i,regime,cycle,E_cap,E_ind,E_dissipated"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 8));
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows.last().unwrap()[0].parse::<f64>().unwrap(), 0.1);
    assert!(rows.iter().any(|r| r[3] == "OFF"));
    assert_eq!(rows.last().unwrap()[4], "3");
}

#[test]
fn simulate_to_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = zeno(&[
        "simulate",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    let s = &v["samples"][0];
    for k in [
        "t",
        "q",
        "i",
        "regime",
        "cycle",
        "E_cap",
        "E_ind",
        "E_dissipated",
    ] {
        assert!(s.get(k).is_some(), "{k}");
    }
}

#[test]
fn simulate_quadratic_fixed() {
    let o = zeno(&[
        "simulate",
        "--i0",
        "-0.1",
        "--mode",
        "quadratic",
        "--reset",
        "fixed",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn invalid_physics_exits_1() {
    let o = zeno(&["simulate", "--q0", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q0"));
    assert_eq!(zeno(&["simulate", "--i0", "0.2"]).status.code(), Some(1));
}

#[test]
fn regime_warning_does_not_fail_simulate() {
    let o = zeno(&["simulate", "--T", "5"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon_vs_tau_omega"));
}

#[test]
fn unknown_strategy_exits_2() {
    let o = zeno(&["simulate", "--reset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("percycle"));
}

#[test]
fn classify_reports_phase() {
    let o = zeno(&["classify", "--i0", "-0.2"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["phase"]["phase"], "AntiZeno");
    assert_eq!(v["generic"]["phase"], "AntiZeno");
    assert_eq!(v["phase"]["ratio"], v["generic"]["ratio"]);
    assert_eq!(json(&zeno(&["classify"]))["phase"]["phase"], "Zeno");

    let o = zeno(&["classify", "--i0", "-0.6"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["validity"]["ok"], false);
}

#[test]
fn limits_table() {
    let o = zeno(&[
        "limits", "--delta", "2,1", "--x", "1", "--un", "1000000", "--i0", "-1", "--T", "0.5",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    let t = v["universality"]["table"].as_array().unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t[0]["class"], "Unity");
    assert!((t[1]["value"].as_f64().unwrap() - std::f64::consts::E).abs() < 3e-6);
    assert!((v["anti_zeno"]["envelope"].as_f64().unwrap() - (-0.5f64).exp()).abs() < 1e-15);
    assert_eq!(v["zeno"]["limit"], 1.0);
}

#[test]
fn oracle_check_exit_codes() {
    let o = zeno(&["oracle-check", "--i0", "-0.05", "--N", "20"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["pass"], true);

    // a coarse step cannot meet a tight tolerance
    let o = zeno(&[
        "oracle-check",
        "--i0",
        "-0.05",
        "--N",
        "20",
        "--step",
        "0.01",
        "--tol",
        "1e-14",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["pass"], false);

    assert_eq!(
        zeno(&["oracle-check", "--step", "-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn converge_table() {
    let o = zeno(&["converge", "--Ns", "100,200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,q_norm,deficit,bound_norm,envelope_dev");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("200,"));
}

#[test]
fn sweep_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ok.toml",
        "[fixed]\nL = 1\nC = 1\nq0 = 1\nT = 0.1\ni0 = 0\n[axes.N]\nvalues = [10, 100]\n[outputs]\nformat = \"json\"\n",
    );
    let o = zeno(&["sweep", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["records"].as_array().unwrap().len(), 2);

    let o = zeno(&["sweep", "--config", &cfg, "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 3);

    let bad = write(dir.path(), "bad.toml", "[fixed]\nL = 1\nbogus = 2\n");
    let o = zeno(&["sweep", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fixed.bogus"));

    let missing = dir.path().join("absent.toml");
    assert_eq!(
        zeno(&["sweep", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_keeps_invalid_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "inv.toml",
        "[fixed]\nL = 1\nC = 1\nq0 = 1\ni0 = 0\nN = 10\n[axes.T]\nvalues = [0.1, 5]\n",
    );
    let o = zeno(&["sweep", "--config", &cfg]);
    assert!(o.status.success());
    let text = stdout(&o);
    let valid: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(10).unwrap())
        .collect();
    assert_eq!(valid, ["true", "false"]);
}
