use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn lowenv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowenv")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lowenv-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sssp_three_disks() {
    let p = scratch("three.csv");
    fs::write(&p, "id,x,y,radius\n1,0,0,0\n2,5,0,0\n3,10,0,0\n").unwrap();
    let o = lowenv(&["sssp", p.to_str().unwrap(), "-r", "5", "--source", "1", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "id,dis,pred\n1,0,\n2,5,1\n3,10,2\n");
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("\"iterations\""), "{err}");
    assert!(err.contains("check passed"), "{err}");
}

#[test]
fn sssp_unreachable_disk_prints_inf() {
    let p = scratch("apart.csv");
    fs::write(&p, "id,x,y,radius\n1,0,0,1\n2,100,0,1\n").unwrap();
    let o = lowenv(&["sssp", p.to_str().unwrap(), "-r", "1", "--source", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "id,dis,pred\n1,inf,\n2,0,\n");
}

#[test]
fn sssp_input_errors_exit_2() {
    let empty = scratch("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = lowenv(&["sssp", empty.to_str().unwrap(), "--source", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error: "));

    let one = scratch("one.csv");
    fs::write(&one, "id,x,y,radius\n1,0,0,0\n").unwrap();
    assert_eq!(lowenv(&["sssp", one.to_str().unwrap(), "--source", "9"]).status.code(), Some(2));
    assert_eq!(lowenv(&["sssp", "/nonexistent/disks.csv", "--source", "1"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lowenv(&[]).status.code(), Some(2));
    assert_eq!(lowenv(&["gen", "--mix", "1/2"]).status.code(), Some(2));
    assert_eq!(lowenv(&["run", "x.jsonl", "--structure", "tree"]).status.code(), Some(2));
    assert_eq!(lowenv(&["verify-cutting", "-n", "0"]).status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_and_replays_cleanly() {
    let a = lowenv(&["gen", "--seed", "1", "-n", "10", "--mix", "1/0/0"]);
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.starts_with("{\"op\":\"insert\"")));
    assert_eq!(stdout(&lowenv(&["gen", "--seed", "1", "-n", "10", "--mix", "1/0/0"])), text);

    let w = scratch("w.jsonl");
    let o = lowenv(&["gen", "--seed", "2", "-n", "800", "--prefill", "100", "--out", w.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    for structure in ["chan", "star"] {
        let o = lowenv(&["run", w.to_str().unwrap(), "--structure", structure, "--oracle-diff", "--summary"]);
        assert_eq!(o.status.code(), Some(0), "{structure}");
        let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(report["executed"], 800);
        assert!(report["divergence"].is_null());
        assert!(report["counters"]["mean_reinsertions_per_deletion"].is_number());
    }
}

#[test]
fn malformed_workload_exits_2() {
    let w = scratch("bad.jsonl");
    fs::write(&w, "{\"op\":\"delete\",\"seq\":0,\"id\":3}\n").unwrap();
    let o = lowenv(&["run", w.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 1"));
}

#[test]
fn faithful_fuzz_reports_a_repro_and_exits_1() {
    let repro = scratch("repro.jsonl");
    let o = lowenv(&["fuzz", "--mode", "faithful", "--budget", "20000", "--out", repro.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let idx = v["divergence_index"].as_u64().unwrap();
    assert!(v["dual_witness"]["index"].as_u64().unwrap() < idx);
    let lines = fs::read_to_string(&repro).unwrap().lines().count() as u64;
    assert_eq!(lines, v["repro_len"].as_u64().unwrap());

    // Replaying the repro in faithful mode reports the divergence but exits 0.
    let r = lowenv(&["run", repro.to_str().unwrap(), "--mode", "faithful", "--oracle-diff", "--summary"]);
    assert_eq!(r.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["divergence"]["index"].as_u64(), Some(idx));
    // The corrected structure answers the same workload exactly.
    let c = lowenv(&["run", repro.to_str().unwrap(), "--mode", "corrected", "--oracle-diff", "--summary"]);
    assert_eq!(c.status.code(), Some(0));
}

#[test]
fn zero_budget_fuzz_exits_0() {
    let o = lowenv(&["fuzz", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exhausted"]["ops"], 0);
}

#[test]
fn verify_cutting_passes() {
    let o = lowenv(&["verify-cutting", "--seed", "3", "-n", "400", "-k", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["gaps"], 0);
}
