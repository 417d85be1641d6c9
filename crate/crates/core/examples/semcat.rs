//! Assign semantic categories from the bundled taxonomy fragment and show
//! the propagated counts behind each choice: `cargo run --example semcat`.

use std::path::Path;

use sbmt_amr::semcat::SemanticTaxonomy;

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/taxonomy");
    let tax = SemanticTaxonomy::from_files(
        &dir.join("hierarchy.tsv"),
        &dir.join("senses.tsv"),
        &dir.join("salient.txt"),
    )?;
    for concept in ["computer", "car", "soldier", "teacher", "dog", "fear-01"] {
        println!("{concept:<10} -> {}", tax.assign_category(concept));
        for (category, w) in tax.weights(concept) {
            if tax.is_salient(&category) {
                println!("    {category:<10} {w:.3}");
            }
        }
    }
    Ok(())
}
