use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn topicrate(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicrate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = topicrate(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn plain_corpus(dir: &Path) {
    ok(dir, &["synth", "--output", "s.jsonl", "--k", "3", "--vocab-size", "60", "--docs", "50", "--doc-len", "40", "--seed", "2"]);
    ok(dir, &["preprocess", "--input", "s.jsonl", "--output", "c.json", "--min-doc-freq", "1", "--no-language-filter"]);
}

#[test]
fn perplexity_csv_has_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    plain_corpus(dir.path());
    ok(dir.path(), &["perplexity", "--input", "c.json", "--output", "p.csv", "--k", "2,5,10,20,50", "--iters", "30", "--burn-in", "5"]);
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,train_perplexity,heldout_perplexity");
    let ks: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ks, ["2", "5", "10", "20", "50"]);
}

#[test]
fn training_is_byte_identical_and_manifest_hashes_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    plain_corpus(d);
    let args = ["train-lda", "--input", "c.json", "--output", "m.json.gz", "--k", "3", "--iters", "40", "--burn-in", "10"];
    ok(d, &args);
    let first = fs::read(d.join("m.json.gz")).unwrap();
    ok(d, &args);
    assert_eq!(first, fs::read(d.join("m.json.gz")).unwrap());
    assert_eq!(&first[..2], &[0x1f, 0x8b]);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(d.join("m.json.gz.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["subcommand"], "train-lda");
    assert_eq!(manifest["config"]["sampler"]["seed"], 0);
    assert_eq!(manifest["inputs"][0]["path"], "c.json");
    let corpus_hash = format!("{:x}", Sha256::digest(fs::read(d.join("c.json")).unwrap()));
    assert_eq!(manifest["inputs"][0]["sha256"], corpus_hash.as_str());
    // A different seed must change the model.
    let mut reseeded = args.to_vec();
    reseeded.extend(["--seed", "9"]);
    ok(d, &reseeded);
    assert_ne!(first, fs::read(d.join("m.json.gz")).unwrap());
}

#[test]
fn default_grid_has_48_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = |out: &str, docs: &str, seed: &str| {
        ok(d, &["synth", "--output", out, "--labeled", "--n-label", "1", "--n-bg", "1", "--vocab-size", "220", "--docs", docs, "--doc-len", "30", "--seed", seed]);
    };
    synth("train.jsonl", "3", "1");
    synth("test.jsonl", "2", "2");
    ok(d, &["grid-search", "--input", "train.jsonl", "--test", "test.jsonl", "--output", "grid.csv", "--no-language-filter", "--min-doc-len", "10", "--iters", "10", "--burn-in", "2", "--infer-iters", "5", "--infer-burn-in", "1"]);
    let text = fs::read_to_string(d.join("grid.csv")).unwrap();
    assert_eq!(text.lines().count(), 49);
}

#[test]
fn bad_flags_exit_2_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    plain_corpus(d);
    let out = topicrate(d, &["train-lda", "--input", "c.json", "--output", "m.json", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--k"));
    assert!(!d.join("m.json").exists());

    let out = topicrate(d, &["classify", "--model", "m.json", "--input", "s.jsonl", "--output", "o.json", "--threshold", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--threshold"));

    let out = topicrate(d, &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = topicrate(dir.path(), &["train-lda", "--input", "absent.json", "--output", "m.json", "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}
