use std::path::PathBuf;
use std::process::{Command, Output};

fn qpu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpu")).args(args).env_remove("QPU_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qpu-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn truant_of_a_non_universal_quaternary() {
    let o = qpu(&["truant", "--form", "2,2,3,17", "--bound", "100000"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "41");
}

#[test]
fn truant_absent_for_a_universal_form() {
    let o = qpu(&["truant", "--form", "1,2,5", "--bound", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("none"));
}

#[test]
fn criterion_verdicts() {
    let o = qpu(&["criterion", "--form", "2,3,4,5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "prime-universal (criterion S)");

    let o = qpu(&["criterion", "--form", "2,3,6,7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[23, 67]"), "{}", stdout(&o));
}

#[test]
fn goodvec_relation_holds() {
    let o = qpu(&["goodvec", "--f", "2,3,5", "--g", "1,1,30", "--d", "7", "--a", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().next() == Some("precedes: true"));
}

#[test]
fn proper_exit_codes() {
    assert_eq!(qpu(&["proper", "--form", "1,2,5"]).status.code(), Some(0));
    assert_eq!(qpu(&["proper", "--form", "1,1,2,3"]).status.code(), Some(1));
    assert_eq!(qpu(&["proper", "--form", "2,3,6"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let o = qpu(&["criterion", "--form", "2,x,5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(qpu(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qpu(&["truant", "--form", "[[2,1,0],[1,2,0],[0,0,3]]"]).status.code(), Some(2));
    assert_eq!(qpu(&["verify-paper"]).status.code(), Some(2));
    assert_eq!(qpu(&["goodvec", "--f", "2,3,5", "--g", "1,1,30", "--d", "7", "--a", "9"]).status.code(), Some(2));
}

#[test]
fn capacity_error_exits_two() {
    let o = qpu(&["sieve", "build", "--form", "1,1,1", "--bound", "100000000000000"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certificates_are_deterministic_across_thread_counts() {
    let a = scratch("cert-a.json");
    let b = scratch("cert-b.json");
    let args = ["good-residues", "--f", "2,3,7", "--d", "30"];
    let run = |path: &PathBuf, threads: &str| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend(["--threads", threads, "--json", path.to_str().unwrap()]);
        assert_eq!(qpu(&v).status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    let first = run(&a, "1");
    let second = run(&b, "4");
    assert_eq!(first, second);

    let cert: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(cert["command"], "good-residues");
    assert_eq!(cert["inputs"]["d"], 30);
    let residues: Vec<u64> = serde_json::from_value(cert["result"]["residues"].clone()).unwrap();
    assert_eq!(residues, [0, 2, 3, 6, 8, 9, 10, 12, 15, 18, 20, 21, 22, 24, 27, 28]);
    assert!(cert["tool_version"].is_string());
}

#[test]
fn represents_certificate_has_a_valid_witness() {
    let path = scratch("represents.json");
    let o = qpu(&["represents", "--form", "2,3,5", "--n", "97", "--json", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let x: Vec<i64> = serde_json::from_value(cert["witnesses"][0].clone()).unwrap();
    assert_eq!(2 * x[0] * x[0] + 3 * x[1] * x[1] + 5 * x[2] * x[2], 97);

    assert_eq!(qpu(&["represents", "--form", "2,3,5", "--n", "1"]).status.code(), Some(1));
}

#[test]
fn sieve_file_round_trip() {
    let path = scratch("s.bin");
    let p = path.to_str().unwrap();
    assert_eq!(qpu(&["sieve", "export", "--form", "1,1,1", "--bound", "1000", "--out", p]).status.code(), Some(0));
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"QPUSIEVE");
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1000);

    assert_eq!(qpu(&["sieve", "import", "--form", "1,1,1", "--file", p, "--n", "6"]).status.code(), Some(0));
    // 7 is a sum of four squares but not three
    assert_eq!(qpu(&["sieve", "import", "--form", "1,1,1", "--file", p, "--n", "7"]).status.code(), Some(1));
    assert_eq!(qpu(&["sieve", "import", "--form", "1,1,1", "--file", p, "--n", "5000"]).status.code(), Some(2));
}

#[test]
fn escalation_exports() {
    let dot = scratch("tree.dot");
    let tree = scratch("tree.json");
    let o = qpu(&["escalate", "--max-rank", "4", "--dot", dot.to_str().unwrap(), "--tree", tree.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("<1,2,5>"));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&tree).unwrap()).unwrap();
    assert!(json.is_object() || json.is_array());
}

#[test]
fn node_cap_exits_two() {
    assert_eq!(qpu(&["escalate", "--max-rank", "6", "--node-cap", "50"]).status.code(), Some(2));
}

#[test]
fn single_proof_script() {
    let o = qpu(&["proof-script", "2,2,3,17", "--bound", "100000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(qpu(&["proof-script", "no-such-script"]).status.code(), Some(2));
}

#[test]
fn verify_paper_single_table() {
    let o = qpu(&["verify-paper", "--table", "truants"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[PASS]"));
}
