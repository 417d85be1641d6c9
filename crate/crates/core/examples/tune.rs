//! Tune decoder weights on the toy dev split toward Smatch and toward
//! BLEU over AMRese, and report how the two track each other:
//! `cargo run --release --example tune`.

use std::path::Path;

use sbmt_amr::decoder::WeightVector;
use sbmt_amr::pipeline::{load_split, train_models, PipelineConfig, SplitPaths};
use sbmt_amr::transform::{treeify, yield_amrese};
use sbmt_amr::tune::{coordinate_ascent, DevSet, Objective, TuneConfig, TuneModels};

fn split(dir: &Path, name: &str) -> SplitPaths {
    SplitPaths {
        amr: Some(dir.join(format!("{name}.amr"))),
        source: Some(dir.join(format!("{name}.src"))),
        alignment: Some(dir.join(format!("{name}.align"))),
    }
}

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let cfg = PipelineConfig {
        train: split(&dir, "train"),
        dev: split(&dir, "dev"),
        ..PipelineConfig::default()
    };
    let (m, _) = train_models(&cfg, &load_split(&cfg.train)?)?;
    let dev = load_split(&cfg.dev)?;
    let references = dev
        .graphs
        .iter()
        .zip(&dev.alignments)
        .map(|(g, a)| Ok(vec![yield_amrese(&treeify(g, Some(a), &cfg.transform())?.tree)]))
        .collect::<anyhow::Result<_>>()?;
    let devset = DevSet {
        sources: dev.tokens.clone(),
        gold: dev.graphs.clone(),
        references,
    };
    let models = TuneModels {
        grammar: &m.grammar,
        ngram: Some(&m.ngram),
        ngram2: None,
        amr: Some(&m.amr),
    };
    // a poor start leaves room to climb
    let mut init = WeightVector::zeros();
    for (name, v) in WeightVector::default().iter() {
        init.set(name, -v)?;
    }
    for objective in [Objective::Smatch, Objective::Bleu] {
        let tcfg = TuneConfig {
            objective,
            max_passes: 2,
            ..TuneConfig::default()
        };
        let report = coordinate_ascent(&devset, models, &init, &tcfg)?;
        println!(
            "{objective}: {} evaluations, {:.4} -> {:.4}, BLEU/Smatch correlation {}",
            report.steps.len(),
            report.steps[0].objective,
            report.best(),
            report
                .correlation
                .map_or("n/a".to_string(), |r| format!("{r:.3}"))
        );
        print!("{}", report.weights.to_text());
    }
    Ok(())
}
