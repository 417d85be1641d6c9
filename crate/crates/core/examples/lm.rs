//! Train both language models on the toy corpus and break one graph's
//! score into its factors: `cargo run --example lm`.

use std::path::Path;

use sbmt_amr::amr::{parse_penman, read_amr_corpus, AmrGraph};
use sbmt_amr::lm::{train_amr_lm, train_ngram};
use sbmt_amr::transform::{disconnect, treeify, yield_amrese, TransformConfig};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy/train.amr");
    let graphs: Vec<AmrGraph> = read_amr_corpus(&std::fs::read_to_string(path)?)?
        .into_iter()
        .map(|e| e.graph)
        .collect();
    let cfg = TransformConfig::default();
    let yields: Vec<Vec<String>> = graphs
        .iter()
        .map(|g| Ok(yield_amrese(&treeify(g, None, &cfg)?.tree)))
        .collect::<anyhow::Result<_>>()?;
    let ngram = train_ngram(&yields, 3)?;
    println!(
        "AMRese trigram model: {} contexts, perplexity {:.3} on its training data",
        ngram.context_count(),
        ngram.perplexity(&yields)
    );
    println!(
        "  log P({}) = {:.4}",
        yields[0].join(" "),
        ngram.score_sequence(&yields[0])
    );

    let trees: Vec<AmrGraph> = graphs.iter().map(disconnect).collect();
    let amr = train_amr_lm(&trees, None)?;
    let g = disconnect(&parse_penman(
        "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
    )?);
    println!("AMR tree model on {}", g.canonical_key());
    for f in amr.factors(&g, false)? {
        println!(
            "  {:<8} {:<10} | {:<24} {:>8.4}",
            format!("{:?}", f.kind),
            f.event,
            f.context.join(" "),
            f.logprob
        );
    }
    println!("  total {:.4}", amr.score_amr(&g, false)?);
    Ok(())
}
