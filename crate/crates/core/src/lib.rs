//! AMR parsing as string-to-tree syntax-based machine translation.
//!
//! The crate converts AMR graphs into ordered trees that string-to-tree
//! rule extraction can consume, learns translation rules and language
//! models from aligned English/AMR pairs, decodes English into AMR with a
//! beamed chart decoder, and scores output with Smatch.
//!
//! | module | purpose |
//! |---|---|
//! | [`amr`] | PENMAN reading and writing, the graph model |
//! | [`align`] | word alignments to graph elements and tree leaves |
//! | [`tree`] | ordered trees and their bracketed form |
//! | [`transform`] | graph → tree transforms and their inverse |
//! | [`semcat`] | semantic category preterminals from a taxonomy |
//! | [`lm`] | AMRese n-gram model and the generative AMR tree model |
//! | [`ghkm`] | frontier sets, minimal rule extraction, rule features |
//! | [`decoder`] | CKY-style beamed decoding with k-best rescoring |
//! | [`smatch`] | triple matching by hill-climbing or exhaustive search |
//! | [`tune`] | BLEU and coordinate-ascent weight tuning |
//! | [`pipeline`] | configuration and end-to-end experiment runs |
//! | [`cli`] | the `sbmt-amr` command line |
//! | [`synth`] | seeded random graphs and the toy corpus |
//! | [`text`] | token quoting and the s-expression lexer |

pub mod align;
pub mod amr;
pub mod cli;
pub mod decoder;
pub mod ghkm;
pub mod lm;
pub mod pipeline;
pub mod semcat;
pub mod smatch;
pub mod synth;
pub mod text;
pub mod transform;
pub mod tree;
pub mod tune;

pub use align::{count_crossings, AlignmentSet, AmrElement, LeafAlignment};
pub use amr::{emit_penman, parse_penman, AmrError, AmrGraph, Role, Target};
pub use transform::{
    disconnect, push_labels, relabel_strings, reorder, restructure, to_amr, yield_amrese, RestructureMode,
    TransformConfig, TransformError,
};
pub use tree::SbmtTree;
