use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn stoqwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stoqwalk"))
        .args(args)
        .env_remove("STOQWALK_SEED")
        .output()
        .expect("binary runs")
}

fn stoqwalk_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stoqwalk"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SWAP_CIRCUIT: &str = r#"{
  "wires": 3,
  "registers": {"n": 1, "n_w": 1, "n_0": 1, "n_plus": 0},
  "gates": [["CNOT", 0, 1], ["CNOT", 1, 0], ["CNOT", 0, 1]]
}"#;

#[test]
fn hypercube_walk_always_accepts() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("h8.json");
    let o = stoqwalk(&["gen", "--family", "hypercube", "--n", "8", "-o", s(&h)]);
    assert_eq!(code(&o), 0);
    let o = stoqwalk(&["--json", "verify", s(&h), "--start", "01010101", "--trials", "100"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["result"]["acceptance_rate"], 1.0);
    assert_eq!(r["result"]["params"]["steps"], 6400);
}

#[test]
fn reports_are_byte_identical_for_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("f.json");
    assert_eq!(code(&stoqwalk(&["gen", "--family", "frustrated", "--n", "5", "--m", "6", "--seed", "3", "-o", s(&h)])), 0);
    let args = ["--json", "verify", s(&h), "--start", "00000", "--steps", "6", "--trials", "500", "--seed", "11"];
    let a = stoqwalk(&args);
    let b = stoqwalk(&args);
    let c = stoqwalk(&[&["--threads", "1"], &args[..]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn seed_comes_from_the_environment_unless_given() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("h.json");
    assert_eq!(code(&stoqwalk(&["gen", "--family", "ghz", "--n", "4", "-o", s(&h)])), 0);
    let base = ["--json", "verify", s(&h), "--start", "0000", "--steps", "5", "--trials", "40"];
    assert_eq!(json(&stoqwalk(&base))["seed"], 2026);
    assert_eq!(json(&stoqwalk_env(&base, "STOQWALK_SEED", "99"))["seed"], 99);
    let flagged = [&base[..], &["--seed", "5"]].concat();
    assert_eq!(json(&stoqwalk_env(&flagged, "STOQWALK_SEED", "99"))["seed"], 5);
    assert_eq!(code(&stoqwalk_env(&base, "STOQWALK_SEED", "abc")), 2);
}

#[test]
fn malformed_instance_reports_line_and_column() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.json", "{\"n\": 2,\n  \"terms\": [\n    {\"qubits\": [0], \"subsets\": [[\"0\", \"1\"]], \"weight\": 2}\n  ]\n}\n");
    let o = stoqwalk(&["validate", s(&p)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(err.contains("weight"), "{err}");

    let p = write(&dir, "cut.json", "{\"n\": 2, \"terms\": [");
    let o = stoqwalk(&["spectrum", s(&p)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cut.json:1:"));
}

#[test]
fn invalid_instance_is_a_check_failure() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "overlap.json", r#"{"n": 2, "terms": [{"qubits": [0, 1], "subsets": [["00", "01"], ["01"]]}]}"#);
    let o = stoqwalk(&["--json", "validate", s(&p)]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["result"]["violations"][0]["kind"], "overlapping_subsets");
    assert_eq!(r["source"]["sha256"].as_str().unwrap().len(), 64);
    // other commands refuse it as input
    assert_eq!(code(&stoqwalk(&["spectrum", s(&p)])), 2);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&stoqwalk(&["frobnicate"])), 2);
    assert_eq!(code(&stoqwalk(&[])), 2);
    assert_eq!(code(&stoqwalk(&["verify", "missing.json", "--start", "0"])), 2);
    assert_eq!(code(&stoqwalk(&["--help"])), 0);
}

#[test]
fn spectrum_and_graph_queries() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("h.json");
    assert_eq!(code(&stoqwalk(&["gen", "--family", "hypercube", "--n", "3", "-o", s(&h)])), 0);
    for method in ["dense", "power"] {
        let r = json(&stoqwalk(&["--json", "spectrum", s(&h), "--method", method]));
        assert!(r["result"]["ground_energy"].as_f64().unwrap().abs() < 1e-9);
        assert_eq!(r["result"]["method"], method);
    }
    let r = json(&stoqwalk(&["--json", "graph", "neighbors", s(&h), "000"]));
    // three one-qubit terms, M = 2: two edges per term per endpoint
    assert_eq!(r["result"]["degree"], "6");
    assert_eq!(r["result"]["self_loops"], "3");
    assert_eq!(r["result"]["entries"].as_array().unwrap().len(), 4);

    let set = write(&dir, "set.txt", "000 001 # a face edge\n010\n");
    let r = json(&stoqwalk(&["--json", "graph", "cut", s(&h), "--set", s(&set)]));
    assert_eq!(r["result"]["volume"], "18");
    assert_eq!(r["result"]["boundary"], "5");
    assert_eq!(r["result"]["conductance"], "5/18");
    let r = json(&stoqwalk(&["--json", "graph", "cut", s(&h), "--set", s(&set), "--exclude-self-loops"]));
    assert_eq!(r["result"]["volume"], "9");
}

#[test]
fn badness_listing() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("p.json");
    assert_eq!(code(&stoqwalk(&["gen", "--family", "planted", "--n", "4", "--k", "2", "-o", s(&h)])), 0);
    let r = json(&stoqwalk(&["--json", "graph", "badness", s(&h), "--all"]));
    assert_eq!(r["result"]["bad_count"], 4);
    assert_eq!(r["result"]["bad"][0], "1100");
    let r = json(&stoqwalk(&["--json", "graph", "badness", s(&h), "--string", "0111"]));
    assert_eq!(r["result"]["bad"], false);
}

#[test]
fn bad_start_rejects_immediately_and_traces() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("p.json");
    let trace = dir.path().join("t.jsonl");
    let curve = dir.path().join("c.csv");
    assert_eq!(code(&stoqwalk(&["gen", "--family", "planted", "--n", "4", "--k", "2", "-o", s(&h)])), 0);
    let o = stoqwalk(&[
        "--json", "verify", s(&h), "--start", "1100", "--steps", "20", "--trials", "50", "--trace", s(&trace), "--curve", s(&curve),
    ]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["result"]["rejection"]["mean"], 1.0);
    assert_eq!(r["result"]["trace_outcome"]["step"], 0);
    assert_eq!(std::fs::read_to_string(&trace).unwrap(), "");
    let csv = std::fs::read_to_string(&curve).unwrap();
    assert!(csv.starts_with("steps,trials,rejections,rate,ci_low,ci_high\n1,50,50,1,"));
    assert_eq!(csv.lines().count(), 1 + 6);

    let o = stoqwalk(&["verify", s(&h), "--start", "0000", "--steps", "30", "--trials", "30", "--lazy", "0.5", "--trace", s(&trace)]);
    assert_eq!(code(&o), 0);
    for line in std::fs::read_to_string(&trace).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["step"].is_u64() && v["string"].is_string() && v["bad"].is_boolean());
        assert!(v["term"].is_u64() || v["term"] == "stay");
    }
}

#[test]
fn calibration_success_and_failure() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("p.json");
    let h = dir.path().join("h.json");
    assert_eq!(code(&stoqwalk(&["gen", "--family", "frustrated", "--n", "5", "--m", "6", "--seed", "2", "-o", s(&p)])), 0);
    let o = stoqwalk(&["--json", "verify", s(&p), "--calibrate", "--trials", "200", "--starts", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(json(&o)["result"]["calibration"]["steps"].as_u64().unwrap() >= 1);

    assert_eq!(code(&stoqwalk(&["gen", "--family", "hypercube", "--n", "4", "-o", s(&h)])), 0);
    let o = stoqwalk(&["verify", s(&h), "--calibrate", "--trials", "50", "--starts", "2", "--max-steps", "16"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn expansion_commands() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("g.json");
    let rep = dir.path().join("nice.json");
    assert_eq!(code(&stoqwalk(&["gen", "--family", "ghz", "--n", "4", "-o", s(&h)])), 0);
    let o = stoqwalk(&["--json", "expansion", "nice-set", s(&h), "--epsilon", "0.01", "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&rep).unwrap(), o.stdout);
    let r = json(&o);
    assert_eq!(r["result"]["boundary_edges"], "0");
    assert_eq!(r["result"]["nice"]["set"].as_array().unwrap().len(), 2);

    let o = stoqwalk(&["--json", "expansion", "check-boundary", s(&h), "--trials", "200"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["result"]["held"], 200);
}

#[test]
fn compile_and_simulate_a_circuit() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "swap.json", SWAP_CIRCUIT);
    let out = dir.path().join("compiled.json");
    let o = stoqwalk(&["--json", "compile", s(&c), "--input", "1", "-o", s(&out)]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["result"]["n"], 6);
    assert_eq!(r["result"]["valid"], true);
    assert_eq!(code(&stoqwalk(&["validate", s(&out)])), 0);

    let r = json(&stoqwalk(&["--json", "simulate", s(&c), "--input", "0", "--optimal-witness"]));
    let uniform = r["result"]["acceptance"].as_f64().unwrap();
    let best = r["result"]["optimal"]["acceptance"].as_f64().unwrap();
    // the witness ends on wire 0, so |+> is accepted with certainty
    assert!((uniform - 1.0).abs() < 1e-12);
    assert!((best - 1.0).abs() < 1e-12);

    let w = write(&dir, "w.json", "[1.0, 0.0]");
    let r = json(&stoqwalk(&["--json", "simulate", s(&c), "--input", "0", "--witness", s(&w)]));
    assert!((r["result"]["acceptance"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let bad = write(&dir, "loop.json", r#"{"wires": 2, "registers": {"n": 1, "n_w": 1, "n_0": 0, "n_plus": 0}, "gates": [["CNOT", 1, 1]]}"#);
    assert_eq!(code(&stoqwalk(&["compile", s(&bad)])), 2);
}

#[test]
fn quick_suite_writes_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("summary.csv");
    let o = stoqwalk(&["--json", "suite", "--quick", "--csv", s(&csv)]);
    let r = json(&o);
    let criteria = r["result"]["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 10);
    let all_pass = criteria.iter().all(|c| c["pass"] == true);
    assert_eq!(code(&o), if all_pass { 0 } else { 1 });
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("id,name,pass,detail\n"));
    assert_eq!(table.lines().count(), 11);
}
