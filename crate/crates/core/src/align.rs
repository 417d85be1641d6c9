//! Word alignments between source tokens and AMR elements.
//!
//! On disk an alignment is one sentence per line of space-separated
//! `tokIdx-element` links, where element is `var` for an instance and
//! `var.role.k` for the k-th (1-based) occurrence of `role` under `var`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::amr::AmrGraph;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AmrElement {
    Instance(String),
    Role {
        parent: String,
        label: String,
        occurrence: usize,
    },
}

impl fmt::Display for AmrElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmrElement::Instance(v) => f.write_str(v),
            AmrElement::Role {
                parent,
                label,
                occurrence,
            } => write!(f, "{parent}.{label}.{occurrence}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("malformed alignment link `{0}`")]
    Malformed(String),
    #[error("alignment refers to `{0}`, which is not in the graph")]
    UnknownElement(String),
    #[error("token index {index} out of range for a sentence of {len} tokens")]
    TokenOutOfRange { index: usize, len: usize },
    #[error("leaf index {index} out of range for a tree with {len} leaves")]
    LeafOutOfRange { index: usize, len: usize },
}

impl FromStr for AmrElement {
    type Err = AlignmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        match parts.as_slice() {
            [v] if !v.is_empty() => Ok(AmrElement::Instance(v.to_string())),
            [v, label, k] if !v.is_empty() && !label.is_empty() => {
                let occurrence: usize = k
                    .parse()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| AlignmentError::Malformed(s.to_string()))?;
                Ok(AmrElement::Role {
                    parent: v.to_string(),
                    label: label.to_string(),
                    occurrence,
                })
            }
            _ => Err(AlignmentError::Malformed(s.to_string())),
        }
    }
}

/// Links from source token indices to AMR elements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentSet {
    links: BTreeSet<(usize, AmrElement)>,
}

impl AlignmentSet {
    pub fn new(links: impl IntoIterator<Item = (usize, AmrElement)>) -> Self {
        AlignmentSet {
            links: links.into_iter().collect(),
        }
    }

    pub fn links(&self) -> impl Iterator<Item = &(usize, AmrElement)> {
        self.links.iter()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Check every link against a graph and sentence length.
    pub fn validate(&self, g: &AmrGraph, source_len: usize) -> Result<(), AlignmentError> {
        for (tok, el) in &self.links {
            if *tok >= source_len {
                return Err(AlignmentError::TokenOutOfRange {
                    index: *tok,
                    len: source_len,
                });
            }
            let ok = match el {
                AmrElement::Instance(v) => g.concept(v).is_some(),
                AmrElement::Role {
                    parent,
                    label,
                    occurrence,
                } => g.roles_of(parent).filter(|r| &r.label == label).count() >= *occurrence,
            };
            if !ok {
                return Err(AlignmentError::UnknownElement(el.to_string()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for AlignmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (tok, el) in &self.links {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{tok}-{el}")?;
        }
        Ok(())
    }
}

impl FromStr for AlignmentSet {
    type Err = AlignmentError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut links = BTreeSet::new();
        for field in line.split_whitespace() {
            let (tok, el) = field
                .split_once('-')
                .ok_or_else(|| AlignmentError::Malformed(field.to_string()))?;
            let tok: usize = tok
                .parse()
                .map_err(|_| AlignmentError::Malformed(field.to_string()))?;
            links.insert((tok, el.parse()?));
        }
        Ok(AlignmentSet { links })
    }
}

/// One alignment per line.
pub fn read_alignment_file(text: &str) -> Result<Vec<AlignmentSet>, AlignmentError> {
    text.lines().map(str::parse).collect()
}

/// Links between source token indices and tree leaf indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LeafAlignment {
    links: Vec<(usize, usize)>,
}

impl LeafAlignment {
    pub fn new(links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut links: Vec<_> = links.into_iter().collect();
        links.sort_unstable();
        links.dedup();
        LeafAlignment { links }
    }

    /// `(source index, leaf index)` pairs, sorted.
    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Source positions aligned to each of `leaf_count` leaves.
    pub fn by_leaf(&self, leaf_count: usize) -> Result<Vec<Vec<usize>>, AlignmentError> {
        let mut out = vec![Vec::new(); leaf_count];
        for &(src, leaf) in &self.links {
            out.get_mut(leaf)
                .ok_or(AlignmentError::LeafOutOfRange {
                    index: leaf,
                    len: leaf_count,
                })?
                .push(src);
        }
        Ok(out)
    }
}

/// Number of link pairs `(i, j)`, `(i', j')` with `i < i'` and `j > j'`.
pub fn count_crossings(links: &[(usize, usize)]) -> usize {
    let mut n = 0;
    for (a, &(i, j)) in links.iter().enumerate() {
        for &(i2, j2) in &links[a + 1..] {
            if (i < i2 && j > j2) || (i2 < i && j2 > j) {
                n += 1;
            }
        }
    }
    n
}
