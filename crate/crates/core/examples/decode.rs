//! Train on the toy corpus, then parse a few sentences and print the
//! k-best lists: `cargo run --release --example decode [SENTENCE]`.

use std::path::Path;

use sbmt_amr::decoder::{Decoder, DecoderConfig, WeightVector};
use sbmt_amr::pipeline::{load_split, preprocess, train_models, PipelineConfig, SplitPaths};

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let cfg = PipelineConfig {
        train: SplitPaths {
            amr: Some(dir.join("train.amr")),
            source: Some(dir.join("train.src")),
            alignment: Some(dir.join("train.align")),
        },
        ..PipelineConfig::default()
    };
    let train = load_split(&cfg.train)?;
    let (m, _) = train_models(&cfg, &train)?;
    let decoder = Decoder::new(
        &m.grammar,
        Some(&m.ngram),
        Some(&m.amr),
        WeightVector::default(),
        DecoderConfig {
            kbest: 3,
            ..DecoderConfig::default()
        },
    );
    let dev = load_split(&SplitPaths {
        amr: Some(dir.join("dev.amr")),
        source: Some(dir.join("dev.src")),
        alignment: None,
    })?;
    let inputs: Vec<(Vec<String>, Option<String>)> = match std::env::args().nth(1) {
        Some(s) => vec![(preprocess(&s), None)],
        None => dev
            .tokens
            .iter()
            .zip(&dev.graphs)
            .take(4)
            .map(|(t, g)| (t.clone(), Some(g.canonical_key())))
            .collect(),
    };
    for (tokens, gold) in inputs {
        let r = decoder.decode(&tokens);
        println!("{}  ({} chart items)", tokens.join(" "), r.items);
        for h in &r.hypotheses {
            println!(
                "  {:>9.3}{}  {}",
                h.score,
                if h.glue { " glue" } else { "" },
                h.amrese().join(" ")
            );
        }
        println!("  output {}", r.best().amr.canonical_key());
        if let Some(g) = gold {
            println!("  gold   {g}");
        }
        println!();
    }
    Ok(())
}
