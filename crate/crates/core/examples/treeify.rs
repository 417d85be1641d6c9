//! Walk one aligned graph through every tree transform:
//! `cargo run --example treeify`.

use sbmt_amr::align::AlignmentSet;
use sbmt_amr::amr::parse_penman;
use sbmt_amr::transform::{disconnect, push_labels, to_amr, treeify, yield_amrese, TransformConfig};

const AMR: &str = "(f / fear-01 :polarity - :ARG0 (s / soldier) :ARG1 (d / die-01 :ARG1 s))";
const SENTENCE: &str = "the soldier was not afraid of dying";
const ALIGNMENT: &str = "1-s 3-f.polarity.1 4-f 6-d";

fn main() -> anyhow::Result<()> {
    let g = parse_penman(AMR)?;
    let a: AlignmentSet = ALIGNMENT.parse()?;
    println!("sentence    {SENTENCE}");
    println!("graph       {}", g.canonical_key());
    let tree_graph = disconnect(&g);
    println!("disconnect  {}", tree_graph.canonical_key());
    println!("push labels {}", push_labels(&tree_graph)?);
    for (name, cfg) in [
        ("flat", TransformConfig::flat()),
        ("role", TransformConfig::default()),
    ] {
        let t = treeify(&g, Some(&a), &cfg)?;
        println!();
        println!("{name} tree   {}", t.tree);
        println!("{name} AMRese {}", yield_amrese(&t.tree).join(" "));
        println!("crossings   {} -> {}", t.crossings.0, t.crossings.1);
        println!("inverse     {}", to_amr(&t.tree)?.canonical_key());
    }
    Ok(())
}
