//! String-to-tree rule extraction.
//!
//! A tree node is on the frontier when the closure of the source positions
//! aligned beneath it contains no position aligned outside it. Each frontier
//! node yields one minimal rule: the tree fragment from that node down to the
//! nearest frontier descendants, which become variables, paired with the
//! source words of the node's span with the descendants' spans replaced by
//! those variables.
//!
//! Rule spans are the closure of the aligned positions, except at the root,
//! which covers the whole sentence. Unaligned source words therefore belong
//! to the lowest rule whose span contains them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::align::LeafAlignment;
use crate::text::{force_quote, lex_sexp, quote, SexpToken};
use crate::tree::{parse_brackets, SbmtTree, TreeParseError};

pub const F_RULE_GIVEN_ROOT: &str = "p_rule_given_root";
pub const F_SOURCE_GIVEN_TARGET: &str = "p_source_given_target";
pub const F_COUNT: &str = "count";
pub const F_UNIQUE_SOURCE: &str = "unique_source";
pub const F_SOURCE_TERMINALS: &str = "src_terminals";
pub const F_VARIABLES: &str = "vars";

/// Rule feature names in file and weight order.
pub const RULE_FEATURES: [&str; 6] = [
    F_RULE_GIVEN_ROOT,
    F_SOURCE_GIVEN_TARGET,
    F_COUNT,
    F_UNIQUE_SOURCE,
    F_SOURCE_TERMINALS,
    F_VARIABLES,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GhkmError {
    #[error("alignment links source position {index}, sentence has {len} tokens")]
    SourceOutOfRange { index: usize, len: usize },
    #[error("alignment links leaf {index}, tree has {len} leaves")]
    LeafOutOfRange { index: usize, len: usize },
    #[error("grammar line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Target side of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fragment {
    Node { label: String, children: Vec<Fragment> },
    Term(String),
    Var { index: usize, label: String },
}

impl Fragment {
    pub fn label(&self) -> &str {
        match self {
            Fragment::Node { label, .. } | Fragment::Var { label, .. } => label,
            Fragment::Term(t) => t,
        }
    }

    /// Replace variable `i` with `args[i]`.
    pub fn instantiate(&self, args: &[&SbmtTree]) -> SbmtTree {
        match self {
            Fragment::Node { label, children } => SbmtTree::node(
                label.clone(),
                children.iter().map(|c| c.instantiate(args)).collect(),
            ),
            Fragment::Term(t) => SbmtTree::leaf(t.clone()),
            Fragment::Var { index, .. } => args[*index].clone(),
        }
    }

    /// Terminals and variables in left-to-right order.
    pub fn frontier(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_frontier(&mut out);
        out
    }

    fn collect_frontier(&self, out: &mut Vec<Symbol>) {
        match self {
            Fragment::Node { children, .. } => {
                for c in children {
                    c.collect_frontier(out);
                }
            }
            Fragment::Term(t) => out.push(Symbol::Term(t.clone())),
            Fragment::Var { index, .. } => out.push(Symbol::Var(*index)),
        }
    }

    /// Labels of the variables by index.
    pub fn var_labels(&self) -> Vec<String> {
        let mut v: Vec<(usize, String)> = Vec::new();
        fn go(f: &Fragment, v: &mut Vec<(usize, String)>) {
            match f {
                Fragment::Node { children, .. } => children.iter().for_each(|c| go(c, v)),
                Fragment::Term(_) => {}
                Fragment::Var { index, label } => v.push((*index, label.clone())),
            }
        }
        go(self, &mut v);
        v.sort();
        v.into_iter().map(|(_, l)| l).collect()
    }
}

fn looks_like_var(s: &str) -> bool {
    let digits = s.strip_prefix('x').unwrap_or("");
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn looks_like_target_var(s: &str) -> bool {
    s.split_once(':').is_some_and(|(v, _)| looks_like_var(v))
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fragment::Node { label, children } => {
                write!(f, "({}", quote(label))?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            Fragment::Term(t) if looks_like_target_var(t) => f.write_str(&force_quote(t)),
            Fragment::Term(t) => f.write_str(&quote(t)),
            Fragment::Var { index, label } => write!(f, "x{index}:{label}"),
        }
    }
}

/// A terminal or variable on either side of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Term(String),
    Var(usize),
}

/// Write a source side: space-separated, variables as `x0`.
pub fn format_source(src: &[Symbol]) -> String {
    let parts: Vec<String> = src
        .iter()
        .map(|s| match s {
            Symbol::Term(t) if looks_like_var(t) => force_quote(t),
            Symbol::Term(t) => quote(t).into_owned(),
            Symbol::Var(i) => format!("x{i}"),
        })
        .collect();
    parts.join(" ")
}

fn parse_source(text: &str) -> Result<Vec<Symbol>, String> {
    let toks = lex_sexp(text).map_err(|p| format!("unterminated quote at byte {p}"))?;
    toks.into_iter()
        .map(|t| match t {
            SexpToken::Atom(a, false) if looks_like_var(&a) => {
                a[1..].parse().map(Symbol::Var).map_err(|e| e.to_string())
            }
            SexpToken::Atom(a, _) => Ok(Symbol::Term(a)),
            _ => Err("brackets are not allowed in a source side".to_string()),
        })
        .collect()
}

fn parse_fragment(text: &str) -> Result<Fragment, TreeParseError> {
    parse_brackets(
        text,
        |atom, quoted| match atom.split_once(':') {
            Some((v, label)) if !quoted && looks_like_var(v) => Fragment::Var {
                index: v[1..].parse().unwrap_or(usize::MAX),
                label: label.to_string(),
            },
            _ => Fragment::Term(atom),
        },
        |label, children| Fragment::Node { label, children },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationRule {
    pub root: String,
    pub source: Vec<Symbol>,
    pub target: Fragment,
    pub count: u64,
    pub features: BTreeMap<String, f64>,
}

impl TranslationRule {
    pub fn var_count(&self) -> usize {
        self.source.iter().filter(|s| matches!(s, Symbol::Var(_))).count()
    }

    pub fn source_terminals(&self) -> usize {
        self.source.len() - self.var_count()
    }

    /// Identity used when merging duplicates.
    pub fn key(&self) -> String {
        format!("{}\t{}\t{}", self.root, format_source(&self.source), self.target)
    }

    pub fn feature(&self, name: &str) -> f64 {
        self.features.get(name).copied().unwrap_or(0.0)
    }
}

impl fmt::Display for TranslationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let feats: Vec<String> = self.features.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}\t{}", self.key(), feats.join(","))
    }
}

// ---------------------------------------------------------------------------
// Frontier

struct Flat<'a> {
    nodes: Vec<&'a SbmtTree>,
    children: Vec<Vec<usize>>,
    /// Leaf index range of each node.
    leaves: Vec<(usize, usize)>,
}

fn flatten(t: &SbmtTree) -> Flat<'_> {
    fn go<'a>(t: &'a SbmtTree, f: &mut Flat<'a>, next_leaf: &mut usize) -> usize {
        let id = f.nodes.len();
        f.nodes.push(t);
        f.children.push(Vec::new());
        f.leaves.push((*next_leaf, *next_leaf));
        if t.is_leaf() {
            *next_leaf += 1;
        } else {
            for c in t.children() {
                let cid = go(c, f, next_leaf);
                f.children[id].push(cid);
            }
        }
        f.leaves[id].1 = *next_leaf;
        id
    }
    let mut f = Flat {
        nodes: Vec::new(),
        children: Vec::new(),
        leaves: Vec::new(),
    };
    go(t, &mut f, &mut 0);
    f
}

/// All nodes of `t` in preorder, terminals included. Node ids used by
/// [`frontier_set`] index this list.
pub fn preorder(t: &SbmtTree) -> Vec<&SbmtTree> {
    flatten(t).nodes
}

/// Closure interval `[lo, hi)` of each frontier node, `None` elsewhere.
fn frontier_spans(
    flat: &Flat<'_>,
    a: &LeafAlignment,
    source_len: Option<usize>,
) -> Vec<Option<(usize, usize)>> {
    let links = a.links();
    flat.nodes
        .iter()
        .enumerate()
        .map(|(id, node)| {
            if node.is_leaf() {
                return None;
            }
            if id == 0 {
                let hi = source_len.unwrap_or_else(|| links.iter().map(|&(s, _)| s + 1).max().unwrap_or(0));
                return Some((0, hi));
            }
            let (l0, l1) = flat.leaves[id];
            let inside = |leaf: usize| leaf >= l0 && leaf < l1;
            let mut span: Option<(usize, usize)> = None;
            for &(s, leaf) in links {
                if inside(leaf) {
                    span = Some(match span {
                        None => (s, s),
                        Some((lo, hi)) => (lo.min(s), hi.max(s)),
                    });
                }
            }
            let (lo, hi) = span?;
            let clash = links.iter().any(|&(s, leaf)| !inside(leaf) && s >= lo && s <= hi);
            (!clash).then_some((lo, hi + 1))
        })
        .collect()
}

/// Preorder ids (see [`preorder`]) of the frontier nodes of `t`. The root is
/// always included; other nodes need at least one aligned leaf.
pub fn frontier_set(t: &SbmtTree, a: &LeafAlignment) -> Vec<usize> {
    let flat = flatten(t);
    frontier_spans(&flat, a, None)
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|_| i))
        .collect()
}

/// One minimal rule per frontier node, in preorder of those nodes.
pub fn extract_minimal_rules(
    source: &[String],
    t: &SbmtTree,
    a: &LeafAlignment,
) -> Result<Vec<TranslationRule>, GhkmError> {
    let flat = flatten(t);
    let leaf_count = flat.leaves[0].1;
    for &(s, leaf) in a.links() {
        if s >= source.len() {
            return Err(GhkmError::SourceOutOfRange {
                index: s,
                len: source.len(),
            });
        }
        if leaf >= leaf_count {
            return Err(GhkmError::LeafOutOfRange {
                index: leaf,
                len: leaf_count,
            });
        }
    }
    let spans = frontier_spans(&flat, a, Some(source.len()));
    let mut rules = Vec::new();
    for (id, span) in spans.iter().enumerate() {
        let Some((lo, hi)) = *span else { continue };
        let mut vars: Vec<(usize, usize, usize)> = Vec::new();
        let target = cut(&flat, &spans, id, true, &mut vars);
        let mut by_start: Vec<(usize, usize, usize)> = vars.clone();
        by_start.sort();
        let mut src = Vec::new();
        let mut p = lo;
        let mut next = by_start.iter().peekable();
        while p < hi {
            match next.peek() {
                Some(&&(vlo, vhi, index)) if vlo == p => {
                    src.push(Symbol::Var(index));
                    p = vhi;
                    next.next();
                }
                _ => {
                    src.push(Symbol::Term(source[p].clone()));
                    p += 1;
                }
            }
        }
        debug_assert!(next.next().is_none(), "variable span outside its rule");
        rules.push(TranslationRule {
            root: flat.nodes[id].label().to_string(),
            source: src,
            target,
            count: 1,
            features: BTreeMap::new(),
        });
    }
    Ok(rules)
}

/// Fragment below frontier node `id`; `vars` collects `(lo, hi, index)`.
fn cut(
    flat: &Flat<'_>,
    spans: &[Option<(usize, usize)>],
    id: usize,
    top: bool,
    vars: &mut Vec<(usize, usize, usize)>,
) -> Fragment {
    let node = flat.nodes[id];
    if node.is_leaf() {
        return Fragment::Term(node.label().to_string());
    }
    if let (false, Some((lo, hi))) = (top, spans[id]) {
        let index = vars.len();
        vars.push((lo, hi, index));
        return Fragment::Var {
            index,
            label: node.label().to_string(),
        };
    }
    Fragment::Node {
        label: node.label().to_string(),
        children: flat.children[id]
            .iter()
            .map(|&c| cut(flat, spans, c, false, vars))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Grammar

/// Rules with duplicates merged, indexed by root label and by first source
/// terminal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleGrammar {
    rules: Vec<TranslationRule>,
    keys: HashMap<String, usize>,
    by_root: BTreeMap<String, Vec<usize>>,
    by_first_terminal: HashMap<String, Vec<usize>>,
}

impl RuleGrammar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rules(rules: impl IntoIterator<Item = TranslationRule>) -> Self {
        let mut g = Self::new();
        for r in rules {
            g.add(r);
        }
        g
    }

    /// Add a rule, summing counts into an existing identical rule.
    pub fn add(&mut self, rule: TranslationRule) -> usize {
        let key = rule.key();
        if let Some(&i) = self.keys.get(&key) {
            self.rules[i].count += rule.count;
            return i;
        }
        let i = self.rules.len();
        self.by_root.entry(rule.root.clone()).or_default().push(i);
        if let Some(Symbol::Term(t)) = rule.source.first() {
            self.by_first_terminal.entry(t.clone()).or_default().push(i);
        }
        self.keys.insert(key, i);
        self.rules.push(rule);
        i
    }

    pub fn rules(&self) -> &[TranslationRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn with_root(&self, root: &str) -> &[usize] {
        self.by_root.get(root).map_or(&[], Vec::as_slice)
    }

    pub fn with_first_terminal(&self, word: &str) -> &[usize] {
        self.by_first_terminal.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GhkmError> {
        let mut g = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let err = |message: String| GhkmError::Format { line: i + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(err("expected four tab-separated fields".into()));
            }
            let source = parse_source(fields[1]).map_err(err)?;
            let target = parse_fragment(fields[2]).map_err(|e| err(e.to_string()))?;
            let mut features = BTreeMap::new();
            for kv in fields[3].split(',').filter(|s| !s.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| err(format!("bad feature `{kv}`")))?;
                let v: f64 = v.parse().map_err(|_| err(format!("bad value `{v}`")))?;
                features.insert(k.to_string(), v);
            }
            let count = features.get(F_COUNT).map_or(1, |&c| c as u64);
            let rule = TranslationRule {
                root: fields[0].to_string(),
                source,
                target,
                count,
                features,
            };
            let n_vars = rule.target.var_labels().len();
            let mut seen: Vec<usize> = rule
                .source
                .iter()
                .filter_map(|s| match s {
                    Symbol::Var(i) => Some(*i),
                    Symbol::Term(_) => None,
                })
                .collect();
            seen.sort_unstable();
            if seen != (0..n_vars).collect::<Vec<_>>() {
                return Err(err("source and target variables differ".into()));
            }
            g.add(rule);
        }
        Ok(g)
    }
}

/// Fill in the six rule features from merged counts.
pub fn score_grammar(g: &RuleGrammar) -> RuleGrammar {
    let mut root_total: HashMap<&str, u64> = HashMap::new();
    let mut target_total: HashMap<String, u64> = HashMap::new();
    let mut targets_per_source: HashMap<String, usize> = HashMap::new();
    for r in g.rules() {
        *root_total.entry(&r.root).or_default() += r.count;
        *target_total.entry(r.target.to_string()).or_default() += r.count;
        *targets_per_source.entry(format_source(&r.source)).or_default() += 1;
    }
    let mut out = RuleGrammar::new();
    for r in g.rules() {
        let mut r = r.clone();
        let c = r.count as f64;
        r.features = BTreeMap::from([
            (
                F_RULE_GIVEN_ROOT.to_string(),
                c / root_total[r.root.as_str()] as f64,
            ),
            (
                F_SOURCE_GIVEN_TARGET.to_string(),
                c / target_total[&r.target.to_string()] as f64,
            ),
            (F_COUNT.to_string(), c),
            (
                F_UNIQUE_SOURCE.to_string(),
                f64::from(u8::from(targets_per_source[&format_source(&r.source)] == 1)),
            ),
            (F_SOURCE_TERMINALS.to_string(), r.source_terminals() as f64),
            (F_VARIABLES.to_string(), r.var_count() as f64),
        ]);
        out.add(r);
    }
    out
}

/// Extract and merge minimal rules from many tuples, in parallel.
pub fn extract_grammar(tuples: &[(Vec<String>, SbmtTree, LeafAlignment)]) -> Result<RuleGrammar, GhkmError> {
    use rayon::prelude::*;
    let per: Vec<Vec<TranslationRule>> = tuples
        .par_iter()
        .map(|(s, t, a)| extract_minimal_rules(s, t, a))
        .collect::<Result<_, _>>()?;
    Ok(score_grammar(&RuleGrammar::from_rules(per.into_iter().flatten())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn tree(s: &str) -> SbmtTree {
        s.parse().unwrap()
    }

    #[test]
    fn monotone_alignment_makes_every_node_frontier() {
        let t = tree("(S (A (aP a) (bP b)) (B (cP c) (dP d)))");
        let a = LeafAlignment::new((0..4).map(|i| (i, i)));
        let ids = frontier_set(&t, &a);
        let internal: Vec<usize> = preorder(&t)
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.is_leaf())
            .map(|(i, _)| i)
            .collect();
        assert_eq!(ids, internal);
    }

    #[test]
    fn crossing_siblings_are_not_frontier() {
        // leaves a b | c d, with b and c both aligned into the other half
        let t = tree("(S (A (aP a) (bP b)) (B (cP c) (dP d)))");
        let a = LeafAlignment::new([(0, 0), (2, 1), (1, 2), (3, 3)]);
        let nodes = preorder(&t);
        let ids = frontier_set(&t, &a);
        let labels: Vec<&str> = ids.iter().map(|&i| nodes[i].label()).collect();
        assert_eq!(labels, ["S", "aP", "bP", "cP", "dP"]);
    }

    #[test]
    fn rule_sides() {
        let t = tree("(S (A (aP a) (bP b)) (B (cP c)))");
        let a = LeafAlignment::new([(0, 1), (2, 2)]);
        let src = toks("B0 gap C0 tail");
        let rules = extract_minimal_rules(&src, &t, &a).unwrap();
        let shown: Vec<String> = rules.iter().map(TranslationRule::key).collect();
        assert_eq!(
            shown,
            [
                "S\tx0 gap x1 tail\t(S x0:A x1:B)",
                "A\tx0\t(A (aP a) x0:bP)",
                "bP\tB0\t(bP b)",
                "B\tx0\t(B x0:cP)",
                "cP\tC0\t(cP c)",
            ]
        );
    }

    #[test]
    fn variables_follow_target_order() {
        let t = tree("(S (aP a) (bP b))");
        let a = LeafAlignment::new([(1, 0), (0, 1)]);
        let rules = extract_minimal_rules(&toks("B A"), &t, &a).unwrap();
        assert_eq!(rules[0].key(), "S\tx1 x0\t(S x0:aP x1:bP)");
    }

    #[test]
    fn bad_alignment() {
        let t = tree("(S (aP a))");
        let e = extract_minimal_rules(&toks("w"), &t, &LeafAlignment::new([(1, 0)]));
        assert!(matches!(e, Err(GhkmError::SourceOutOfRange { index: 1, len: 1 })));
        let e = extract_minimal_rules(&toks("w"), &t, &LeafAlignment::new([(0, 3)]));
        assert!(matches!(e, Err(GhkmError::LeafOutOfRange { index: 3, len: 1 })));
    }

    fn rule(root: &str, src: &str, tgt: &str, count: u64) -> TranslationRule {
        TranslationRule {
            root: root.into(),
            source: parse_source(src).unwrap(),
            target: parse_fragment(tgt).unwrap(),
            count,
            features: BTreeMap::new(),
        }
    }

    #[test]
    fn relative_frequencies() {
        let g = score_grammar(&RuleGrammar::from_rules([
            rule("X", "a", "(X (aP a))", 3),
            rule("X", "b", "(X (bP b))", 1),
        ]));
        assert_eq!(g.rules()[0].feature(F_RULE_GIVEN_ROOT), 0.75);
        assert_eq!(g.rules()[1].feature(F_RULE_GIVEN_ROOT), 0.25);
        let single = score_grammar(&RuleGrammar::from_rules([rule("X", "a", "(X (aP a))", 2)]));
        assert_eq!(single.rules()[0].feature(F_RULE_GIVEN_ROOT), 1.0);
        assert_eq!(single.rules()[0].feature(F_SOURCE_GIVEN_TARGET), 1.0);
        assert_eq!(single.rules()[0].feature(F_UNIQUE_SOURCE), 1.0);
    }

    #[test]
    fn duplicates_merge() {
        let g = RuleGrammar::from_rules((0..5).map(|_| rule("X", "a x0", "(X (aP a) x0:Y)", 1)));
        assert_eq!(g.len(), 1);
        assert_eq!(score_grammar(&g).rules()[0].feature(F_COUNT), 5.0);
    }

    #[test]
    fn grammar_text_round_trip() {
        let g = score_grammar(&RuleGrammar::from_rules([
            rule("X", "\"x1\" x0 \"( paren\"", "(X (aP \"x0:Y\") x0:Y)", 2),
            rule("X", "b", "(X (bP b))", 1),
            rule("Y", "b", "(Y (SARG1 \"New York\"))", 7),
        ]));
        let text = g.to_text();
        let back = RuleGrammar::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
        assert_eq!(back.rules()[0].source[0], Symbol::Term("x1".into()));
        assert_eq!(back.with_first_terminal("b"), [1, 2]);
    }

    #[test]
    fn malformed_grammar_lines() {
        assert!(RuleGrammar::from_text("X\ta\t(X a)").is_err());
        assert!(RuleGrammar::from_text("X\tx0 x1\t(X x0:Y)\t").is_err());
        assert!(RuleGrammar::from_text("X\ta\t(X a)\tcount").is_err());
    }
}
