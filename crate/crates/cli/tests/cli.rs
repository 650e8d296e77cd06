use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsefdr"))
        .args(args)
        .output()
        .expect("spawn sparsefdr")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sample_then_denoise() {
    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("y.txt");
    let truth = dir.path().join("mu.txt");
    let est = dir.path().join("est.txt");
    let mut mu = vec![0.0; 500];
    mu[..5].iter_mut().for_each(|v| *v = 8.0);
    fs::write(
        &truth,
        mu.iter().map(|v| format!("{v}\n")).collect::<String>(),
    )
    .unwrap();

    let out = run(&[
        "sample",
        "--n",
        "500",
        "--config",
        p(&truth),
        "--seed",
        "5",
        p(&y),
    ]);
    assert!(out.status.success());
    let again = dir.path().join("y2.txt");
    run(&[
        "sample",
        "--n",
        "500",
        "--config",
        p(&truth),
        "--seed",
        "5",
        p(&again),
    ]);
    assert_eq!(fs::read(&y).unwrap(), fs::read(&again).unwrap());

    let summary = stdout_json(&run(&[
        "denoise",
        "--q",
        "0.1",
        "--sigma",
        "1",
        "--truth",
        p(&truth),
        p(&y),
        p(&est),
    ]));
    assert_eq!(summary["n"], 500);
    let k = summary["k_hat"].as_u64().unwrap();
    assert!((4..=8).contains(&k), "k_hat {k}");
    assert!(summary["fdr_hat"].as_f64().unwrap() <= 0.5);
    let est_lines = fs::read_to_string(&est).unwrap();
    assert_eq!(est_lines.lines().count(), 500);

    let mad = stdout_json(&run(&[
        "denoise",
        "--q",
        "0.1",
        "--mad",
        "--method",
        "step-down",
        p(&y),
        p(&est),
    ]));
    let s = mad["sigma_hat"].as_f64().unwrap();
    assert!((0.85..1.15).contains(&s), "sigma_hat {s}");
}

#[test]
fn boundary_table() {
    let out = run(&["boundary", "--n", "10000", "--q", "0.05", "--k", "1", "12"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k\tt_k\tpenalty_sum\tlambda_kn");
    assert!(lines[2].starts_with("12\t4.012811\t"), "{}", lines[2]);

    let bad = run(&["boundary", "--n", "10", "--q", "0.05", "--k", "11"]);
    assert_eq!(bad.status.code(), Some(2));
    let bad_q = run(&["boundary", "--n", "10", "--q", "1.5", "--k", "1"]);
    assert_eq!(bad_q.status.code(), Some(2));
}

#[test]
fn detect_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mu.txt");
    let mut mu = vec![0.0; 10_000];
    mu[..10].iter_mut().for_each(|v| *v = 5.21);
    fs::write(
        &cfg,
        mu.iter().map(|v| format!("{v}\n")).collect::<String>(),
    )
    .unwrap();
    let v = stdout_json(&run(&[
        "detect",
        "--config",
        p(&cfg),
        "--n",
        "10000",
        "--q",
        "0.05",
        "--ball",
        "l0",
        "--eta",
        "1e-3",
        "--k",
        "5",
        "10",
    ]));
    let km = v["k_mean"].as_f64().unwrap();
    assert!(km > 8.0 && km < 11.0, "k_mean {km}");
    let b = &v["bounds"];
    assert!(b["k_minus"].as_f64().unwrap() <= km && km <= b["k_plus"].as_f64().unwrap());
    assert_eq!(v["exceedance"].as_array().unwrap().len(), 2);

    let short = run(&["detect", "--config", p(&cfg), "--n", "99", "--q", "0.05"]);
    assert_eq!(short.status.code(), Some(3));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"n": 256, "q_list": [0.1, 0.5], "replicates": 20, "seed": 3}"#,
    )
    .unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(run(&["simulate", p(&spec), p(&a)]).status.success());
    assert!(run(&["simulate", p(&spec), p(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let v: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["rows"][0]["ratio_step_up"].as_f64().unwrap() > 0.0);

    let c = dir.path().join("c.json");
    assert!(run(&["simulate", p(&spec), p(&c), "--seed", "4"])
        .status
        .success());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.txt");
    fs::write(&junk, "1\n2\nnot-a-number\n").unwrap();
    let out = dir.path().join("o.txt");
    let r = run(&["denoise", "--q", "0.1", p(&junk), p(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains(":3:"));

    let spec = dir.path().join("bad.json");
    fs::write(&spec, r#"{"n": 64, "bogus": 1}"#).unwrap();
    assert_eq!(run(&["simulate", p(&spec), p(&out)]).status.code(), Some(3));

    assert_eq!(run(&["denoise"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
}
