//! Ordered trees in the SBMT-compatible shape produced by [`crate::transform`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::text::{lex_sexp, quote, SexpToken};

/// Label of every instance node.
pub const INSTANCE_LABEL: &str = "X";
/// Preterminal over string fillers before relabeling.
pub const STRING_PRETERMINAL: &str = "X";
/// Suffix marking identity preterminals.
pub const PRETERMINAL_MARKER: &str = "P";
/// Intermediate label used at the root in role restructuring, and the
/// conditioning context of the root instance in the AMR language model.
pub const ROOT_LABEL: &str = "ROOT";
/// Concept of a placeholder left behind by disconnection.
pub const PLACEHOLDER: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SbmtTree {
    Node { label: String, children: Vec<SbmtTree> },
    Leaf(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeParseError {
    #[error("unterminated quote at byte {0}")]
    Quote(usize),
    #[error("unbalanced brackets")]
    Unbalanced,
    #[error("node without a label")]
    MissingLabel,
    #[error("trailing input after tree")]
    Trailing,
    #[error("empty input")]
    Empty,
}

impl SbmtTree {
    pub fn node(label: impl Into<String>, children: Vec<SbmtTree>) -> Self {
        SbmtTree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn leaf(token: impl Into<String>) -> Self {
        SbmtTree::Leaf(token.into())
    }

    /// A preterminal: a node over exactly one terminal.
    pub fn pre(label: impl Into<String>, token: impl Into<String>) -> Self {
        SbmtTree::node(label, vec![SbmtTree::leaf(token)])
    }

    /// Identity preterminal `<token>P` over `token`.
    pub fn identity_pre(token: &str) -> Self {
        SbmtTree::pre(format!("{token}{PRETERMINAL_MARKER}"), token)
    }

    pub fn label(&self) -> &str {
        match self {
            SbmtTree::Node { label, .. } => label,
            SbmtTree::Leaf(t) => t,
        }
    }

    pub fn children(&self) -> &[SbmtTree] {
        match self {
            SbmtTree::Node { children, .. } => children,
            SbmtTree::Leaf(_) => &[],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, SbmtTree::Leaf(_))
    }

    pub fn is_preterminal(&self) -> bool {
        matches!(self, SbmtTree::Node { children, .. } if children.len() == 1 && children[0].is_leaf())
    }

    /// A node that is neither a terminal nor a preterminal.
    pub fn is_internal(&self) -> bool {
        matches!(self, SbmtTree::Node { .. }) && !self.is_preterminal()
    }

    /// The terminal under a preterminal.
    pub fn pre_token(&self) -> Option<&str> {
        if self.is_preterminal() {
            Some(self.children()[0].label())
        } else {
            None
        }
    }

    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            SbmtTree::Leaf(t) => out.push(t),
            SbmtTree::Node { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            SbmtTree::Leaf(_) => 1,
            SbmtTree::Node { children, .. } => children.iter().map(SbmtTree::leaf_count).sum(),
        }
    }

    /// Number of non-leaf nodes.
    pub fn node_count(&self) -> usize {
        match self {
            SbmtTree::Leaf(_) => 0,
            SbmtTree::Node { children, .. } => 1 + children.iter().map(SbmtTree::node_count).sum::<usize>(),
        }
    }

    pub fn max_arity(&self) -> usize {
        match self {
            SbmtTree::Leaf(_) => 0,
            SbmtTree::Node { children, .. } => children
                .iter()
                .map(SbmtTree::max_arity)
                .max()
                .unwrap_or(0)
                .max(children.len()),
        }
    }
}

impl fmt::Display for SbmtTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SbmtTree::Leaf(t) => f.write_str(&quote(t)),
            SbmtTree::Node { label, children } => {
                write!(f, "({}", quote(label))?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Generic bracketed reader: `leaf` turns an atom into a tree.
pub(crate) fn parse_brackets<T>(
    text: &str,
    mut leaf: impl FnMut(String, bool) -> T,
    mut node: impl FnMut(String, Vec<T>) -> T,
) -> Result<T, TreeParseError> {
    let toks = lex_sexp(text).map_err(TreeParseError::Quote)?;
    if toks.is_empty() {
        return Err(TreeParseError::Empty);
    }
    let mut stack: Vec<(String, Vec<T>)> = Vec::new();
    let mut done: Option<T> = None;
    let mut i = 0;
    while i < toks.len() {
        if done.is_some() {
            return Err(TreeParseError::Trailing);
        }
        match &toks[i] {
            SexpToken::Open => {
                let label = match toks.get(i + 1) {
                    Some(SexpToken::Atom(a, _)) => a.clone(),
                    _ => return Err(TreeParseError::MissingLabel),
                };
                stack.push((label, Vec::new()));
                i += 1;
            }
            SexpToken::Close => {
                let (label, kids) = stack.pop().ok_or(TreeParseError::Unbalanced)?;
                let t = node(label, kids);
                match stack.last_mut() {
                    Some(parent) => parent.1.push(t),
                    None => done = Some(t),
                }
            }
            SexpToken::Atom(a, quoted) => {
                let t = leaf(a.clone(), *quoted);
                match stack.last_mut() {
                    Some(parent) => parent.1.push(t),
                    None => done = Some(t),
                }
            }
        }
        i += 1;
    }
    if !stack.is_empty() {
        return Err(TreeParseError::Unbalanced);
    }
    done.ok_or(TreeParseError::Empty)
}

impl FromStr for SbmtTree {
    type Err = TreeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_brackets(s, |a, _| SbmtTree::Leaf(a), SbmtTree::node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_round_trip() {
        let text = "(X (fear-01P fear-01) (polarityP polarity) (X -) (opP op) (X \"\\\"New York\\\"\"))";
        let t: SbmtTree = text.parse().unwrap();
        assert_eq!(t.to_string(), text);
        assert_eq!(t.leaves()[4], "\"New York\"");
        assert_eq!(t.leaf_count(), 5);
        assert_eq!(t.max_arity(), 5);
    }

    #[test]
    fn node_kinds() {
        let t: SbmtTree = "(X (soldierP soldier))".parse().unwrap();
        assert!(t.is_internal());
        assert!(t.children()[0].is_preterminal());
        assert_eq!(t.children()[0].pre_token(), Some("soldier"));
    }

    #[test]
    fn malformed_brackets() {
        assert_eq!("(X (a b)".parse::<SbmtTree>(), Err(TreeParseError::Unbalanced));
        assert_eq!("(X a))".parse::<SbmtTree>(), Err(TreeParseError::Trailing));
        assert_eq!("(() a)".parse::<SbmtTree>(), Err(TreeParseError::MissingLabel));
        assert_eq!("".parse::<SbmtTree>(), Err(TreeParseError::Empty));
    }
}
