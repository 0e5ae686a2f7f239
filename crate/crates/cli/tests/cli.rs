use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

fn sdfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdfuzz")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn motivating() -> (String, String) {
    let c = corpus("motivating/contract.easm");
    let a = corpus("motivating/contract.abi.json");
    (c.to_string_lossy().into_owned(), a.to_string_lossy().into_owned())
}

#[test]
fn fuzz_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.report.json");
    let metrics = dir.path().join("m.csv");
    let (c, a) = motivating();
    let o = sdfuzz(&["fuzz", &c, &a, "--rng", "2", "--out", out.to_str().unwrap(), "--metrics-out", metrics.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let n = report["findings"].as_array().unwrap().len();
    assert!(n > 0);
    for i in 0..n {
        let r = sdfuzz(&["replay", out.to_str().unwrap(), &i.to_string()]);
        assert_eq!(code(&r), 0);
        assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), "reproduced");
    }
    let csv = std::fs::read_to_string(&metrics).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "generation,test_cases,avg_code_distance,avg_state_distance,coverage,best_fitness,pool_size"
    );
    assert_eq!(lines.count() as u64, report["totals"]["generations"].as_u64().unwrap());
}

#[test]
fn tampered_witness_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.report.json");
    let (c, a) = motivating();
    assert_eq!(code(&sdfuzz(&["fuzz", &c, &a, "--out", out.to_str().unwrap()])), 0);
    let mut report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let f = &mut report["findings"][0];
    let k = f["tx_index"].as_u64().unwrap() as usize;
    f["witness"]["txs"].as_array_mut().unwrap().truncate(k);
    f["witness"]["txs"].as_array_mut().unwrap().push(serde_json::json!({
        "sender": "0xa77ac0a0", "selector": "0xb6b55f25",
        "args": "0000000000000000000000000000000000000000000000000000000000000001", "value": "0x1"
    }));
    std::fs::write(&out, report.to_string()).unwrap();
    let r = sdfuzz(&["replay", out.to_str().unwrap(), "0"]);
    assert_eq!(code(&r), 1, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), "not reproduced");
}

#[test]
fn input_errors_exit_two() {
    let (c, a) = motivating();
    assert_eq!(code(&sdfuzz(&["fuzz", &c, &a, "--max-cases", "0"])), 2);
    assert_eq!(code(&sdfuzz(&["fuzz", &c, &a, "--gamma", "3"])), 2);
    assert_eq!(code(&sdfuzz(&["fuzz", "/nonexistent.easm", &a])), 2);
    assert_eq!(code(&sdfuzz(&["fuzz", &a, &a])), 2);
    assert_eq!(code(&sdfuzz(&["analyze", &c, &c])), 2);
    assert_eq!(code(&sdfuzz(&["nonsense"])), 2);
    assert_eq!(code(&sdfuzz(&["replay", &a, "0"])), 2);
    assert_eq!(code(&sdfuzz(&["--help"])), 0);
}

#[test]
fn replay_index_out_of_range_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.report.json");
    let (c, a) = motivating();
    assert_eq!(code(&sdfuzz(&["fuzz", &c, &a, "--max-cases", "12", "--out", out.to_str().unwrap()])), 0);
    assert_eq!(code(&sdfuzz(&["replay", out.to_str().unwrap(), "999"])), 2);
}

#[test]
fn ablation_flags_reach_the_report() {
    let (c, a) = motivating();
    for (flag, code_g, state_g) in [("code", false, true), ("state", true, false), ("both", false, false)] {
        let o = sdfuzz(&["fuzz", &c, &a, "--max-cases", "30", "--ablate", flag]);
        assert_eq!(code(&o), 0);
        let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(r["guidance"], serde_json::json!({ "code": code_g, "state": state_g }), "{flag}");
    }
}

#[test]
fn analyze_matches_the_report_analysis() {
    let (c, a) = motivating();
    let analysis: serde_json::Value = serde_json::from_slice(&sdfuzz(&["analyze", &c, &a]).stdout).unwrap();
    let o = sdfuzz(&["fuzz", &c, &a, "--max-cases", "12"]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(analysis, report["analysis"]);
}

#[test]
fn hex_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let hex = dir.path().join("c.hex");
    let code_bytes = sdfuzz::bytecode::assemble(&std::fs::read_to_string(corpus("motivating/contract.easm")).unwrap()).unwrap();
    std::fs::write(&hex, format!("0x{}\n", code_bytes.iter().map(|b| format!("{b:02x}")).collect::<String>())).unwrap();
    let (c, a) = motivating();
    let from_hex = sdfuzz(&["analyze", hex.to_str().unwrap(), &a]);
    let from_easm = sdfuzz(&["analyze", &c, &a]);
    assert_eq!(code(&from_hex), 0);
    assert_eq!(from_hex.stdout, from_easm.stdout);
}

#[test]
fn bench_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let fixture = suite.join("one");
    std::fs::create_dir_all(&fixture).unwrap();
    for f in ["contract.easm", "contract.abi.json", "expected.json"] {
        std::fs::copy(corpus("bench/b1").join(f), fixture.join(f)).unwrap();
    }
    std::fs::create_dir_all(suite.join("empty")).unwrap();
    let out = dir.path().join("out");
    let o = sdfuzz(&["bench", suite.to_str().unwrap(), "--seeds", "2", "--max-cases", "120", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty: no expected.json"));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    for config in ["full", "A", "B", "C"] {
        assert!(out.join(format!("one.{config}.distance.csv")).is_file());
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["fixtures"].as_array().unwrap().len(), 1);
}
