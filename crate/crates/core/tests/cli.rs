//! End-to-end runs of the `qsts` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qsts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsts"))
        .args(args)
        .env_remove("QSTS_SEED")
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn entropy_of_equal_states_is_zero() {
    let o = qsts(&["state", "entropy", "--a1", "const:3", "--a2", "const:3", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0.0\n");
}

#[test]
fn chernoff_quantum_equals_classical_for_constants() {
    let o = qsts(&["dist", "chernoff", "--a0", "const:2", "--a1", "const:4", "--quantum", "--classical", "--format", "json", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (q, c) = (v["quantum"].as_f64().unwrap(), v["classical"].as_f64().unwrap());
    assert!((q - c).abs() <= 1e-8);
    assert!(v.get("timestamp").is_none());
}

#[test]
fn state_audit_on_geometric_decay_passes() {
    let o = qsts(&["audit", "state", "--density", &data("geom_decay.json"), "--n", "64", "--m", "71"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("label,n,m,value,bound,pass"));
    assert!(lines.all(|l| l.ends_with(",true")));
    assert!(!text.contains('\r'));
}

#[test]
fn exit_codes_by_failure_kind() {
    assert_eq!(qsts(&["dist", "varstab", "--a", "0.5"]).status.code(), Some(1));
    assert_eq!(qsts(&["state", "entropy", "--a1", "const:0.9", "--a2", "const:3", "--n", "3"]).status.code(), Some(2));
    assert_eq!(qsts(&["density", "eval", "--density", "cos:2"]).status.code(), Some(1));
    assert_eq!(qsts(&["nonsense"]).status.code(), Some(1));
}

#[test]
fn json_errors_are_machine_readable() {
    let o = qsts(&["--json-errors", "state", "entropy", "--a1", "const:0.9", "--a2", "const:3", "--n", "3"]);
    let v: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["exit_code"], 2);
    assert!(v["message"].as_str().unwrap().contains("faithful"));
}

#[test]
fn config_unknown_key_is_rejected() {
    let dir = std::env::temp_dir().join(format!("qsts-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"density": "const:3", "n": 4, "colour": "red"}"#).unwrap();
    let o = qsts(&["--config", bad.to_str().unwrap(), "symbol", "bracket"]);
    assert_eq!(o.status.code(), Some(1));
    let good = dir.join("good.json");
    std::fs::write(&good, r#"{"density": "cos:2,0.5", "n": 16, "seed": 4}"#).unwrap();
    let o = qsts(&["--config", good.to_str().unwrap(), "symbol", "eigs"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 17);
}

#[test]
fn seed_env_default_and_flag_override() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qsts"));
        c.args(["simulate", "geo", "--density", "cos:3,1", "--n", "40"]);
        match env {
            Some(s) => c.env("QSTS_SEED", s),
            None => c.env_remove("QSTS_SEED"),
        };
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("11"), None), run(None, Some("11")));
    assert_eq!(run(Some("12"), Some("11")), run(None, Some("11")));
    assert_ne!(run(None, Some("11")), run(None, Some("12")));
}

#[test]
fn measurement_export_layout() {
    let o = qsts(&["simulate", "measure", "--density", "cos:2,0.5", "--n", "64", "--d", "1", "--seed", "3", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let head: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(head["m"], 5);
    assert_eq!(head["r"], 10);
    assert_eq!(head["seed"], 3);
    assert_eq!(lines.next(), Some("block,j,N"));
    assert_eq!(lines.count(), 50);
}

#[test]
fn estimate_export_layout() {
    let o = qsts(&["estimate", "prelim", "--density", "cos:2,0.5", "--n", "512", "--d", "1", "--seed", "8", "--format", "json", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["theta", "d", "n", "m", "r", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["theta"].as_array().unwrap().len(), 3);
    assert!((v["theta"][1].as_f64().unwrap() - 2.0).abs() < 0.3);
}

#[test]
fn output_file_matches_stdout() {
    let path = std::env::temp_dir().join(format!("qsts-out-{}.csv", std::process::id()));
    let args = ["simulate", "wn", "--density", "cos:2,0.5", "--n", "100", "--l", "64", "--seed", "1"];
    let direct = qsts(&args).stdout;
    let mut with_out = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    with_out.extend(["--out", &p]);
    let o = qsts(&with_out);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct);
}

#[test]
fn failing_audit_row_exits_three() {
    // Strict decrease fails when the ladder is not increasing.
    let o = qsts(&["audit", "chain", "--density", "cos:2,0.5", "--n", "129,65", "--no-sufficiency"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_describes_the_computation() {
    let o = qsts(&["symbol", "gap", "--help"]);
    assert!(stdout(&o).contains("4(m − n + 1)^{1−2α} M"));
    let o = qsts(&["state", "entropy", "--help"]);
    assert!(stdout(&o).contains("R = (A − I)(A + I)^{−1}"));
}
