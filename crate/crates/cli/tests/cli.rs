use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxyexp"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = run(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str], cwd: &Path) -> i32 {
    run(args, cwd).status.code().unwrap()
}

const DATA: [&str; 6] = ["--corpus", "d/corpus.jsonl", "--splits", "d/splits.tsv", "--codes", "d/codes.tsv"];

fn with_data<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(DATA.iter()).chain(tail).copied().collect()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", "d", "--n-docs", "300", "--n-codes", "4", "--vocab-size", "200"];
    args.extend_from_slice(extra);
    ok(&args, dir);
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

#[test]
fn synth_train_and_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, &[]);
    for f in ["corpus.jsonl", "codes.tsv", "splits.tsv", "predictions.jsonl", "planted.json"] {
        assert!(dir.join("d").join(f).is_file(), "{f}");
    }
    ok(&with_data(&["train-proxy"], &["--predictions", "d/predictions.jsonl", "--out", "p.json"]), dir);
    ok(&with_data(&["train-logistic"], &["--out", "l.json"]), dir);

    let out = ok(
        &with_data(
            &["eval-faithfulness"],
            &[
                "--predictions",
                "d/predictions.jsonl",
                "--proxy",
                "p.json",
                "--logistic",
                "l.json",
                "--candidate",
                "bb=d/predictions.jsonl",
                "--out",
                "f.json",
                "--table",
                "f.tsv",
            ],
        ),
        dir,
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report, serde_json::from_slice::<Value>(&read(dir, "f.json")).unwrap());
    assert_eq!(report["split"], "test");
    let rows = report["rows"].as_array().unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r["model"].as_str().unwrap()).collect();
    assert_eq!(names, ["Logistic", "Proxy", "bb"]);
    for m in ["spearman", "pearson", "kendall"] {
        assert_eq!(rows[2][m], 1.0, "{m}");
        assert!(rows[1][m].as_f64().unwrap() > rows[0][m].as_f64().unwrap(), "{m}");
    }
    let table = String::from_utf8(read(dir, "f.tsv")).unwrap();
    assert_eq!(table.lines().count(), 4);

    let out = ok(
        &with_data(&["eval-labels"], &["--proxy", "p.json", "--k", "1,2", "--table", "lab.tsv"]),
        dir,
    );
    let labels: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(labels["rows"][0]["model"], "Proxy");
    assert!(String::from_utf8(read(dir, "lab.tsv")).unwrap().starts_with("Model\t"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut first = Vec::new();
    for round in 0..2 {
        let d = dir.join(format!("r{round}"));
        fs::create_dir(&d).unwrap();
        synth(&d, &[]);
        ok(&with_data(&["train-proxy"], &["--predictions", "d/predictions.jsonl", "--out", "p.json"]), &d);
        ok(&with_data(&["explain"], &["--source", "proxy", "--model", "p.json", "--out", "e.jsonl"]), &d);
        let files: Vec<Vec<u8>> = ["d/corpus.jsonl", "d/splits.tsv", "d/predictions.jsonl", "p.json", "e.jsonl"]
            .iter()
            .map(|f| read(&d, f))
            .collect();
        if round == 0 {
            first = files;
        } else {
            assert!(first == files);
        }
    }
    let d = dir.join("other");
    fs::create_dir(&d).unwrap();
    ok(&["--seed", "14", "synth", "--out", "d", "--n-docs", "300", "--n-codes", "4", "--vocab-size", "200"], &d);
    assert_ne!(read(&d, "d/corpus.jsonl"), first[0]);
}

#[test]
fn grid_search_reports_its_choice() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, &[]);
    let out = ok(
        &with_data(
            &["train-proxy"],
            &["--predictions", "d/predictions.jsonl", "--grid", "--alpha-grid", "0.5,1e-4", "--out", "p.json"],
        ),
        dir,
    );
    let log = String::from_utf8(out.stderr).unwrap();
    assert!(log.contains("chosen alpha 1e-4"), "{log}");
}

#[test]
fn explain_selects_codes_and_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, &["--plausibility"]);
    ok(&with_data(&["train-logistic"], &["--out", "l.json"]), dir);

    let lines = |name: &str| -> Vec<Value> {
        String::from_utf8(read(dir, name))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    };
    ok(
        &with_data(
            &["explain"],
            &["--source", "logistic", "--model", "l.json", "--docs", "doc000,doc001", "--all-codes", "--out", "all.jsonl"],
        ),
        dir,
    );
    let all = lines("all.jsonl");
    assert_eq!(all.len(), 8);
    assert!(all.iter().all(|e| e["model"] == "logistic"));
    assert_eq!(all[0]["doc_id"], "doc000");
    assert_eq!(all[4]["doc_id"], "doc001");

    ok(
        &with_data(
            &["explain"],
            &["--source", "cosine", "--embeddings", "d/embeddings.txt", "--code", "S1", "--split", "validation", "--name", "cos", "--out", "c.jsonl"],
        ),
        dir,
    );
    let cos = lines("c.jsonl");
    assert!(!cos.is_empty());
    assert!(cos.iter().all(|e| e["code"] == "S1" && e["model"] == "cos"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, &[]);
    assert_eq!(code(&["--help"], dir), 0);
    assert_eq!(code(&["train-proxy", "--help"], dir), 0);
    assert_eq!(code(&["train-proxy"], dir), 1);
    assert_eq!(code(&["no-such-command"], dir), 1);
    assert_eq!(
        code(&with_data(&["train-proxy"], &["--predictions", "d/predictions.jsonl", "--alpha", "-1", "--out", "p.json"]), dir),
        1
    );
    assert_eq!(code(&with_data(&["explain"], &["--source", "cosine", "--out", "e.jsonl"]), dir), 1);
    assert_eq!(code(&with_data(&["eval-labels"], &[]), dir), 1);
    assert_eq!(
        code(&with_data(&["train-proxy"], &["--predictions", "missing.jsonl", "--out", "p.json"]), dir),
        2
    );
    assert_eq!(
        code(&with_data(&["train-proxy"], &["--predictions", "d/predictions.jsonl", "--out", "no/dir/p.json"]), dir),
        2
    );
    assert!(!dir.join("p.json").exists());

    fs::write(dir.join("bad.jsonl"), "{not json\n").unwrap();
    assert_eq!(
        code(&with_data(&["train-proxy"], &["--predictions", "bad.jsonl", "--out", "p.json"]), dir),
        2
    );
}

fn annotation_explanations(dir: &Path) -> Vec<PathBuf> {
    // two models: one always picks the first annotated text, the other the last
    let text = String::from_utf8(read(dir, "d/annotations.jsonl")).unwrap();
    let mut first = std::collections::BTreeMap::new();
    let mut last = std::collections::BTreeMap::new();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let key = (v["example_id"].as_str().unwrap().to_owned(), v["code"].as_str().unwrap().to_owned());
        let tokens: Vec<String> = v["explanation"].as_str().unwrap().split(' ').map(str::to_owned).collect();
        first.entry(key.clone()).or_insert_with(|| tokens.clone());
        last.insert(key, tokens);
    }
    let mut paths = Vec::new();
    for (model, picks) in [("first", &first), ("last", &last)] {
        let mut out = String::new();
        for ((doc, code), tokens) in picks {
            let e = serde_json::json!({
                "doc_id": doc, "code": code, "model": model,
                "span_start": 0, "anchor_start": 0, "anchor_score": 1.0, "tokens": tokens,
            });
            out.push_str(&e.to_string());
            out.push('\n');
        }
        let path = dir.join(format!("{model}.jsonl"));
        fs::write(&path, out).unwrap();
        paths.push(path);
    }
    paths
}

#[test]
fn plausibility_protocols_and_scoring() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir, &["--plausibility"]);
    let base = [
        "plausibility",
        "--annotations",
        "d/annotations.jsonl",
        "--embeddings",
        "d/embeddings.txt",
        "--codes",
        "d/annotation_codes.tsv",
    ];

    let mut args = base.to_vec();
    args.extend(["--protocol", "e1", "--out", "e1.json"]);
    let e1: Value = serde_json::from_slice(&ok(&args, dir).stdout).unwrap();
    assert_eq!(e1["protocol"], "e1");
    assert!(e1["accuracy"].as_f64().unwrap() >= 0.85, "{e1}");
    assert!(dir.join("e1.json").is_file());

    let paths = annotation_explanations(dir);
    let mut args = base.to_vec();
    args.extend(["--protocol", "full", "--bootstrap", "200"]);
    for p in &paths {
        args.extend(["--explanations", p.to_str().unwrap()]);
    }
    let out = ok(&args, dir);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    let n = summary["n_examples"].as_u64().unwrap();
    let models = summary["models"].as_array().unwrap();
    assert_eq!(models.len(), 2);
    let total: u64 = models.iter().map(|m| m["score"].as_u64().unwrap()).sum();
    assert!(total as f64 <= 0.42 * (2 * n) as f64);
    for m in models {
        let iv = m["interval"].as_array().unwrap();
        assert!(iv[0].as_u64().unwrap() <= iv[1].as_u64().unwrap());
        assert!(iv[1].as_u64().unwrap() <= n);
    }
    assert_eq!(models[0]["p_vs"]["last"], models[1]["p_vs"]["first"]);
    assert_eq!(ok(&args, dir).stdout, out.stdout);

    let mut args = base.to_vec();
    args.extend(["--protocol", "full"]);
    assert_eq!(code(&args, dir), 1);
}
