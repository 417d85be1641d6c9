//! Regenerate the bundled toy corpus: `cargo run --example make_toy_corpus [DIR]`.

use std::path::PathBuf;

use sbmt_amr::synth::{split_files, toy_splits};

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/toy"));
    std::fs::create_dir_all(&dir)?;
    for (name, pairs) in toy_splits() {
        let (amr, src, align) = split_files(&pairs);
        std::fs::write(dir.join(format!("{name}.amr")), amr)?;
        std::fs::write(dir.join(format!("{name}.src")), src)?;
        std::fs::write(dir.join(format!("{name}.align")), align)?;
        println!("{name}: {} pairs", pairs.len());
    }
    println!("wrote {}", dir.display());
    Ok(())
}
