use std::process::Command;

use bpqp::bench::CSV_HEADER;

fn bpqp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bpqp"))
}

#[test]
fn gen_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpqp()
        .args(["gen", "--family", "socp", "--dims", "20x1", "--count", "4", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 4);
    assert_eq!(names[0], "socp_20x1_0000.json");
}

#[test]
fn gen_rejects_bad_dims() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpqp()
        .args(["gen", "--family", "qp", "--dims", "10", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn bench_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    let status = bpqp()
        .args(["bench", "--family", "qp", "--dims", "10x5", "--runs", "3", "--out"])
        .arg(&path)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("qp,10x5,BPQP,"));
}

#[test]
fn bench_json_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let status = bpqp()
        .args(["bench", "--family", "socp", "--dims", "10x1", "--runs", "2", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[0]["family"], "socp");
}

#[test]
fn bench_exits_two_on_failures() {
    // generated LPs are mostly unbounded, so some instances cannot be solved
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lp.csv");
    let status = bpqp()
        .args(["bench", "--family", "lp", "--dims", "10x5", "--runs", "10", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(path.exists());
}

#[test]
fn portfolio_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let out = bpqp()
        .args(["portfolio", "--synthetic", "d=5,T=520", "--epochs", "1", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["report"]["epochs"].as_array().unwrap().len(), 2);
    assert!(v["report"]["test"]["regret"].is_number());
}
