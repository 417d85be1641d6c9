//! Run the toy experiment with role-restructured and flat trees and print
//! the Smatch table: `cargo run --release --example pipeline [OUT_DIR]`.

use std::path::{Path, PathBuf};

use sbmt_amr::pipeline::{run_pipeline, PipelineConfig, SplitPaths};

fn split(name: &str) -> SplitPaths {
    SplitPaths {
        amr: Some(format!("toy/{name}.amr").into()),
        source: Some(format!("toy/{name}.src").into()),
        alignment: Some(format!("toy/{name}.align").into()),
    }
}

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sbmt-amr-toy"));
    let role = PipelineConfig {
        train: split("train"),
        dev: split("dev"),
        test: split("test"),
        self_parse: true,
        ..PipelineConfig::default()
    };
    let flat = role.clone().flat();
    println!("{:<10} {:>8} {:>8} {:>8}", "trees", "train", "dev", "test");
    for (name, cfg) in [("flat", flat), ("role", role)] {
        let summary = run_pipeline(&cfg, &data, &out.join(name))?;
        let cell = |s: &str| summary.score(s).map_or("n/a".to_string(), |f| format!("{f:.4}"));
        println!(
            "{:<10} {:>8} {:>8} {:>8}",
            name,
            cell("train"),
            cell("dev"),
            cell("test")
        );
        for (stage, status) in &summary.stages {
            if status != "ok" {
                println!("  {stage}: {status}");
            }
        }
    }
    println!("runs under {}", out.display());
    Ok(())
}
