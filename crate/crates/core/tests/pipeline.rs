use std::fs;
use std::path::{Path, PathBuf};

use sbmt_amr::pipeline::{run_pipeline, PipelineConfig, SplitPaths};
use sbmt_amr::synth::{split_files, toy_splits};
use sbmt_amr::transform::RestructureMode;
use sbmt_amr::tune::Objective;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn split(dir: &str, name: &str) -> SplitPaths {
    SplitPaths {
        amr: Some(format!("{dir}/{name}.amr").into()),
        source: Some(format!("{dir}/{name}.src").into()),
        alignment: Some(format!("{dir}/{name}.align").into()),
    }
}

fn toy_config() -> PipelineConfig {
    PipelineConfig {
        train: split("toy", "train"),
        dev: split("toy", "dev"),
        test: split("toy", "test"),
        ..PipelineConfig::default()
    }
}

fn read_dir(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn bundled_toy_corpus_matches_generator() {
    for (name, pairs) in toy_splits() {
        let (amr, src, align) = split_files(&pairs);
        let dir = data_dir().join("toy");
        assert_eq!(
            fs::read_to_string(dir.join(format!("{name}.amr"))).unwrap(),
            amr,
            "{name}.amr"
        );
        assert_eq!(
            fs::read_to_string(dir.join(format!("{name}.src"))).unwrap(),
            src,
            "{name}.src"
        );
        assert_eq!(
            fs::read_to_string(dir.join(format!("{name}.align"))).unwrap(),
            align,
            "{name}.align"
        );
    }
}

#[test]
fn runs_are_byte_identical() {
    let cfg = PipelineConfig {
        tune: Some(Objective::Bleu),
        tune_passes: 1,
        seed: 3,
        ..toy_config()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_pipeline(&cfg, &data_dir(), a.path()).unwrap();
    let rb = run_pipeline(&cfg, &data_dir(), b.path()).unwrap();
    assert!(ra.succeeded(), "{:?}", ra.stages);
    assert_eq!(ra.stages, rb.stages);
    assert_eq!(read_dir(a.path()), read_dir(b.path()));
    assert!(a.path().join("tune.tsv").exists());
    assert!(ra.score("dev").unwrap() > 0.5);
}

#[test]
fn saved_config_reproduces_the_run() {
    let cfg = PipelineConfig {
        restructure: Some(RestructureMode::Concept),
        ..toy_config()
    };
    let a = tempfile::tempdir().unwrap();
    run_pipeline(&cfg, &data_dir(), a.path()).unwrap();
    let saved = PipelineConfig::from_text(&fs::read_to_string(a.path().join("config.txt")).unwrap()).unwrap();
    assert_eq!(saved.to_text(), cfg.to_text());
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&saved, &data_dir(), b.path()).unwrap();
    assert_eq!(read_dir(a.path()), read_dir(b.path()));
}

#[test]
fn empty_test_split_scores_as_not_available() {
    let dir = tempfile::tempdir().unwrap();
    for ext in ["amr", "src", "align"] {
        fs::write(dir.path().join(format!("empty.{ext}")), "").unwrap();
    }
    let cfg = PipelineConfig {
        train: split(&data_dir().join("toy").display().to_string(), "train"),
        dev: split(&data_dir().join("toy").display().to_string(), "dev"),
        test: split(".", "empty"),
        ..PipelineConfig::default()
    };
    let out = dir.path().join("run");
    let r = run_pipeline(&cfg, dir.path(), &out).unwrap();
    assert!(r.succeeded(), "{:?}", r.stages);
    assert_eq!(r.score("test"), None);
    let scores = fs::read_to_string(out.join("scores.tsv")).unwrap();
    assert!(scores.contains("test\t0\tn/a\tn/a\tn/a"), "{scores}");
}

#[test]
fn failed_stage_is_recorded_and_later_stages_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("bad.weights");
    fs::write(&weights, "no_such_feature 1.0\n").unwrap();
    let cfg = PipelineConfig {
        weights: Some(weights),
        ..toy_config()
    };
    let out = dir.path().join("run");
    let r = run_pipeline(&cfg, &data_dir(), &out).unwrap();
    let status: Vec<(&str, &str)> = r.stages.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    assert_eq!(status[0], ("load", "ok"));
    assert_eq!(status[1], ("train", "ok"));
    assert!(status[2].1.starts_with("failed: "), "{status:?}");
    assert_eq!(status[3], ("decode", "skipped"));
    let manifest = fs::read_to_string(out.join("manifest.tsv")).unwrap();
    assert!(manifest.contains("stage\ttune\tfailed: "));
    assert!(manifest.contains("stage\tdecode\tskipped"));
    assert!(!out.join("scores.tsv").exists());
}

#[test]
fn missing_input_fails_the_load_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        train: split("nowhere", "train"),
        ..PipelineConfig::default()
    };
    let r = run_pipeline(&cfg, dir.path(), &dir.path().join("run")).unwrap();
    assert!(r.stages[0].1.starts_with("failed: "));
    assert!(r.stages[1..].iter().all(|(_, s)| s == "skipped"));
}
