//! Extract minimal translation rules from one aligned pair and from the
//! toy corpus: `cargo run --example extract`.

use std::path::Path;

use sbmt_amr::align::AlignmentSet;
use sbmt_amr::amr::parse_penman;
use sbmt_amr::ghkm::{extract_grammar, extract_minimal_rules};
use sbmt_amr::pipeline::{load_split, SplitPaths};
use sbmt_amr::transform::{treeify, TransformConfig};

fn main() -> anyhow::Result<()> {
    let g = parse_penman("(f / fear-01 :polarity - :ARG0 (s / soldier) :ARG1 (d / die-01 :ARG1 s))")?;
    let a: AlignmentSet = "1-s 3-f.polarity.1 4-f 6-d".parse()?;
    let src: Vec<String> = "the soldier was not afraid of dying"
        .split(' ')
        .map(String::from)
        .collect();
    let cfg = TransformConfig::default();
    let t = treeify(&g, Some(&a), &cfg)?;
    println!("tree {}", t.tree);
    for r in extract_minimal_rules(&src, &t.tree, &t.alignment)? {
        println!("  {r}");
    }

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let train = load_split(&SplitPaths {
        amr: Some(dir.join("train.amr")),
        source: Some(dir.join("train.src")),
        alignment: Some(dir.join("train.align")),
    })?;
    let tuples = train
        .graphs
        .iter()
        .zip(&train.alignments)
        .zip(&train.tokens)
        .map(|((g, a), s)| {
            let t = treeify(g, Some(a), &cfg)?;
            Ok((s.clone(), t.tree, t.alignment))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let grammar = extract_grammar(&tuples)?;
    println!(
        "toy corpus: {} pairs, {} distinct rules",
        tuples.len(),
        grammar.len()
    );
    let mut rules: Vec<_> = grammar.rules().iter().collect();
    rules.sort_by(|a, b| b.feature("count").total_cmp(&a.feature("count")));
    for r in rules.iter().take(5) {
        println!("  {r}");
    }
    Ok(())
}
