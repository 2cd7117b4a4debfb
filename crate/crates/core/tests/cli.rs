use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn acdrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acdrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn gen(dir: &Path, seed: &str) -> Output {
    acdrl(&[
        "gen",
        "--seed",
        seed,
        "--num-documents",
        "6",
        "--set",
        "hash_dim=8",
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn gen_without_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = acdrl(&["gen", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_and_unknown_key_exit_2() {
    assert_eq!(acdrl(&["gen", "--seed", "1", "--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = acdrl(&["gen", "--seed", "1", "--set", "gamma_typo=0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gamma_typo"), "{}", stderr(&out));
}

#[test]
fn invalid_transition_row_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = acdrl(&[
        "gen",
        "--seed",
        "1",
        "--set",
        "label_transition=[[0.25,0.25,0.25,0.25],[0.5,0.5,0.5,0.0],[0.25,0.25,0.25,0.25],[0.25,0.25,0.25,0.25]]",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 1"), "{}", stderr(&out));
}

#[test]
fn same_seed_gives_identical_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(gen(&a, "5").status.success());
    assert!(gen(&b, "5").status.success());
    assert!(gen(&c, "6").status.success());
    let read = |d: &Path| fs::read(d.join("corpus.jsonl")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn perfect_agreement_kappa_prints_one() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("r.jsonl");
    fs::write(&ratings, "[3,0]\n[0,3]\n[3,0]\n").unwrap();
    let out = acdrl(&[
        "kappa",
        "--ratings",
        ratings.to_str().unwrap(),
        "--out",
        dir.path().join("k").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1.0");
}

#[test]
fn annotate_rejects_mismatched_window() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert!(gen(&g, "2").status.success());
    let corpus = g.join("corpus.jsonl");
    let t = dir.path().join("t");
    let out = acdrl(&[
        "train",
        "--seed",
        "2",
        "--corpus",
        corpus.to_str().unwrap(),
        "--n-l",
        "1",
        "--n-c",
        "1",
        "--episodes",
        "1",
        "--hash-dim",
        "8",
        "--out",
        t.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let model = t.join("model.bin");
    let annotate = |extra: &[&str], out_dir: &str| {
        let mut args = vec![
            "annotate",
            "--corpus",
            corpus.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let o = dir.path().join(out_dir);
        args.extend(["--out", o.to_str().unwrap()]);
        acdrl(&args)
    };
    let bad = annotate(&["--n-l", "2"], "a1");
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("HA window"), "{}", stderr(&bad));
    let good = annotate(&[], "a2");
    assert!(good.status.success(), "{}", stderr(&good));
    let report = fs::read_to_string(dir.path().join("a2").join("report.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 6);
}

#[test]
fn manifest_rejects_other_command() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert!(gen(&g, "3").status.success());
    let manifest = g.join("manifest.json");
    let out = acdrl(&["kappa", "--config", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn io_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = gen(&blocker.join("sub"), "1");
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}
