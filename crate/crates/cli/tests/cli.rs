use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn toy() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/toy.json")
}

fn kex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn solve_toy_takes_the_chain() {
    let f = toy();
    let v = json(&kex(&["solve", f.to_str().unwrap(), "--chain-cap", "5"]));
    assert_eq!(v["score"], 5.0);
    assert_eq!(v["chains"]["0"].as_array().unwrap().len(), 5);
    let p = json(&kex(&[
        "solve",
        f.to_str().unwrap(),
        "--chain-cap",
        "5",
        "--formulation",
        "pitsp",
    ]));
    assert_eq!(p["score"], 5.0);
}

#[test]
fn empty_instance_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    let out = kex(&[
        "generate",
        "--pairs",
        "0",
        "--ndds",
        "0",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&kex(&["solve", path.to_str().unwrap()]));
    assert_eq!(v["score"], 0.0);
}

#[test]
fn usage_errors_exit_one() {
    let f = toy();
    let f = f.to_str().unwrap();
    for args in [
        vec!["robust", f, "--gamma", "1", "--epsilon", "0.1"],
        vec!["robust", f],
        vec!["robust", f, "--model", "existence", "--epsilon", "0.1"],
        vec!["solve", f, "--cycle-cap", "1"],
        vec!["solve", "/nonexistent/instance.json"],
        vec!["solve", f, "--format", "csv"],
        vec!["fair", f],
        vec!["nonsense"],
    ] {
        let out = kex(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn robust_existence_picks_two_cycles() {
    let f = toy();
    let v = json(&kex(&[
        "robust",
        f.to_str().unwrap(),
        "--model",
        "existence",
        "--gamma",
        "1",
        "--chain-cap",
        "5",
    ]));
    assert_eq!(v["model"], "existence");
    assert_eq!(v["robust_score"], 2.0);
    assert_eq!(v["matching"]["cycles"].as_array().unwrap().len(), 2);
}

#[test]
fn robust_weight_reduces_to_solve() {
    let f = toy();
    let f = f.to_str().unwrap();
    let base = json(&kex(&["solve", f]))["score"].clone();
    for extra in [["--gamma", "0"], ["--epsilon", "1"]] {
        let v = json(&kex(&["robust", f, extra[0], extra[1]]));
        assert_eq!(v["matching"]["score"], base);
        assert_eq!(v["robust_score"], base);
    }
    for method in ["linearized", "price"] {
        let v = json(&kex(&["robust", f, "--gamma", "0", "--method", method]));
        assert_eq!(v["robust_score"], base);
    }
}

#[test]
fn fair_with_zero_weight_has_no_price() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    assert!(kex(&[
        "generate",
        "--pairs",
        "12",
        "--ndds",
        "1",
        "--seed",
        "4",
        "--out",
        path.to_str().unwrap()
    ])
    .status
    .success());
    let v = json(&kex(&[
        "fair",
        path.to_str().unwrap(),
        "--gamma-weight",
        "0",
    ]));
    assert_eq!(v["pof"], 0.0);
    assert_eq!(v["bounds"]["pof_max"], 0.0);
}

#[test]
fn fair_empty_interval_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    // Pair 0 is highly sensitized; only the low cycle 1↔2 competes with 0↔1.
    std::fs::write(
        &path,
        r#"{"pairs":[{"id":0,"cpra":0.9},{"id":1},{"id":2}],"ndds":[],
            "edges":[{"id":0,"src":{"kind":"pair","id":0},"dst":1,"weight":0.0},
                     {"id":1,"src":{"kind":"pair","id":1},"dst":0,"weight":1.0},
                     {"id":2,"src":{"kind":"pair","id":1},"dst":2,"weight":0.75},
                     {"id":3,"src":{"kind":"pair","id":2},"dst":1,"weight":0.75}]}"#,
    )
    .unwrap();
    let out = kex(&[
        "fair",
        path.to_str().unwrap(),
        "--pof-max",
        "0.1",
        "--pf-min",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let ok = json(&kex(&[
        "fair",
        path.to_str().unwrap(),
        "--pof-max",
        "0.5",
        "--pf-min",
        "0",
    ]));
    assert_eq!(ok["gamma_interval"], serde_json::json!([0.5, 1.0]));
}

#[test]
fn simulate_is_reproducible() {
    let f = toy();
    let f = f.to_str().unwrap();
    let args = [
        "simulate",
        f,
        "--chain-cap",
        "5",
        "--trials",
        "50",
        "--seed",
        "3",
    ];
    let a = kex(&args);
    let b = kex(&[&args[..], &["--jobs", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["mode"], "existence");
    assert_eq!(
        v["policies"]["robust"]["delta_opt"]
            .as_array()
            .unwrap()
            .len(),
        50
    );

    let csv = kex(&[&args[..], &["--format", "csv"]].concat());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("trial,policy,realized_score,delta_opt\n"));
    assert_eq!(text.lines().count(), 101);

    let w = [
        "simulate",
        f,
        "--model",
        "weight",
        "--epsilon",
        "0.1",
        "--trials",
        "20",
        "--seed",
        "1",
    ];
    assert_eq!(kex(&w).stdout, kex(&w).stdout);
}

#[test]
fn generate_is_deterministic() {
    let a = kex(&["generate", "--pairs", "8", "--ndds", "1", "--seed", "7"]);
    let b = kex(&["generate", "--pairs", "8", "--ndds", "1", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["pairs"].as_array().unwrap().len(), 8);
}
