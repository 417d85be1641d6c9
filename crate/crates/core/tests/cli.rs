//! Drives the binary through a full train/decode/score chain on the toy data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/toy")
        .join(name)
        .display()
        .to_string()
}

fn taxonomy(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/taxonomy")
        .join(name)
        .display()
        .to_string()
}

fn sbmt(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_sbmt-amr"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn train_decode_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (amrese, grammar, ngram, amrlm) = (
        path(d, "train.amrese"),
        path(d, "grammar.txt"),
        path(d, "ngram.lm"),
        path(d, "amr.lm"),
    );
    let (train_amr, train_src, train_align) = (toy("train.amr"), toy("train.src"), toy("train.align"));

    sbmt(&[
        "treeify",
        "--amr",
        &train_amr,
        "--align",
        &train_align,
        "--amrese",
        "-o",
        &amrese,
    ]);
    assert_eq!(fs::read_to_string(&amrese).unwrap().lines().count(), 50);

    sbmt(&[
        "lm",
        "train-ngram",
        "--input",
        &amrese,
        "--order",
        "3",
        "-o",
        &ngram,
    ]);
    sbmt(&["lm", "train-amr", "--amr", &train_amr, "-o", &amrlm]);
    let scored = stdout(&sbmt(&["lm", "score", "--ngram", &ngram, "--input", &amrese]));
    assert!(scored.to_lowercase().contains("perplexity"), "{scored}");

    sbmt(&[
        "extract",
        "--amr",
        &train_amr,
        "--src",
        &train_src,
        "--align",
        &train_align,
        "-o",
        &grammar,
    ]);
    assert!(!fs::read_to_string(&grammar).unwrap().is_empty());

    let decoded = path(d, "dev.decoded.amr");
    let kbest = path(d, "dev.kbest");
    sbmt(&[
        "--jobs",
        "2",
        "decode",
        "--grammar",
        &grammar,
        "--ngram",
        &ngram,
        "--amrlm",
        &amrlm,
        "--input",
        &toy("dev.src"),
        "--kbest-out",
        &kbest,
        "-o",
        &decoded,
    ]);
    assert!(fs::read_to_string(&kbest).unwrap().contains(" ||| "));

    let report = stdout(&sbmt(&["smatch", "--gold", &toy("dev.amr"), "--test", &decoded]));
    let f: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("F-score: "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(f > 0.5, "{report}");

    let weights = path(d, "weights.txt");
    let dev = format!("{},{},{}", toy("dev.src"), toy("dev.amr"), toy("dev.align"));
    sbmt(&[
        "--seed",
        "1",
        "tune",
        "--dev",
        &dev,
        "--grammar",
        &grammar,
        "--ngram",
        &ngram,
        "--amrlm",
        &amrlm,
        "--objective",
        "bleu",
        "--max-passes",
        "1",
        "-o",
        &weights,
    ]);
    let again = path(d, "decoded2.amr");
    sbmt(&[
        "decode",
        "--grammar",
        &grammar,
        "--ngram",
        &ngram,
        "--weights",
        &weights,
        "--input",
        &toy("dev.src"),
        "-o",
        &again,
    ]);
}

#[test]
fn smatch_of_a_corpus_with_itself_is_one() {
    let out = stdout(&sbmt(&[
        "smatch",
        "--gold",
        &toy("test.amr"),
        "--test",
        &toy("test.amr"),
    ]));
    assert!(out.contains("F-score: 1.0000"), "{out}");
}

#[test]
fn semcat_assigns_categories() {
    let out = stdout(&sbmt(&[
        "semcat",
        "assign",
        "--hierarchy",
        &taxonomy("hierarchy.tsv"),
        "--senses",
        &taxonomy("senses.tsv"),
        "--salient",
        &taxonomy("salient.txt"),
        "--lemma",
        "computer",
        "--lemma",
        "dog",
        "--lemma",
        "fear-01",
    ]));
    assert_eq!(out, "computer\tartefact\ndog\tanimal\nfear-01\tOTHER\n");
}

#[test]
fn run_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg: PathBuf = dir.path().join("config.txt");
    let text = format!(
        "version = 1\ntrain_amr = {}\ntrain_source = {}\ntrain_alignment = {}\ndev_amr = {}\ndev_source = {}\n",
        toy("train.amr"),
        toy("train.src"),
        toy("train.align"),
        toy("dev.amr"),
        toy("dev.src"),
    );
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("run");
    sbmt(&[
        "--seed",
        "5",
        "run",
        "--config",
        &cfg.display().to_string(),
        "--out",
        &out.display().to_string(),
    ]);
    let manifest = fs::read_to_string(out.join("manifest.tsv")).unwrap();
    assert!(manifest.contains("config\tseed\t5"), "{manifest}");
    assert!(manifest.contains("stage\tdecode\tok"), "{manifest}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_sbmt-amr"))
        .args(["treeify", "--amr", "/nonexistent/file.amr"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/file.amr"));
}
