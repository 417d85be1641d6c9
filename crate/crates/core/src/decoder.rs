//! Bottom-up chart decoding of a source sentence into transformed AMR trees.
//!
//! Items are built span by span. Rules are matched by their source side;
//! every variable covers a non-empty sub-span holding an item with the
//! variable's label. Items with the same label and tree are merged, keeping
//! the best score, so with an unbounded beam the chart holds every distinct
//! subtree. Each `(span, label)` cell keeps at most `beam` items.
//!
//! The n-gram model is scored incrementally: an item carries the log
//! probability of every word of its yield whose full history lies inside the
//! item. Words near the left edge are scored once more material is attached
//! to their left, and at the goal the sentence is padded with `<s>` and
//! `</s>`. The score of a complete tree therefore equals the model's score
//! of its yield exactly. The AMR model's context is not local to a span, so
//! it is applied to complete trees only, when rescoring the goal cell.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::amr::AmrGraph;
use crate::ghkm::{RuleGrammar, Symbol, F_COUNT, F_RULE_GIVEN_ROOT, F_SOURCE_GIVEN_TARGET, RULE_FEATURES};
use crate::lm::{AmrTreeModel, NgramModel};
use crate::transform::{is_instance, to_amr};
use crate::tree::{SbmtTree, INSTANCE_LABEL};

pub const F_NGRAM_LM: &str = "ngram_lm";
/// Second AMRese model, trained on the same trees reordered under another
/// alignment set.
pub const F_NGRAM_LM2: &str = "ngram_lm2";
pub const F_AMR_LM: &str = "amr_lm";
pub const F_OOV: &str = "oov";
pub const F_GLUE: &str = "glue";

/// Concept of the root built by the glue fallback.
pub const GLUE_CONCEPT: &str = "multi-sentence";
/// Concept of the graph produced for an empty sentence.
pub const EMPTY_CONCEPT: &str = "amr-empty";

const N_FEATURES: usize = 11;
const I_NGRAM: usize = 6;
const I_AMR: usize = 7;
const I_OOV: usize = 8;
const I_GLUE: usize = 9;
const I_NGRAM2: usize = 10;

/// Every decoder feature, in weight order.
pub const FEATURES: [&str; N_FEATURES] = [
    RULE_FEATURES[0],
    RULE_FEATURES[1],
    RULE_FEATURES[2],
    RULE_FEATURES[3],
    RULE_FEATURES[4],
    RULE_FEATURES[5],
    F_NGRAM_LM,
    F_AMR_LM,
    F_OOV,
    F_GLUE,
    F_NGRAM_LM2,
];

type Feats = [f64; N_FEATURES];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("weights line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("weight for `{0}` is not finite")]
    NotFinite(String),
}

/// Named feature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Feats,
}

impl Default for WeightVector {
    fn default() -> Self {
        let mut w = WeightVector {
            values: [0.0; N_FEATURES],
        };
        for (name, v) in [
            (F_RULE_GIVEN_ROOT, 1.0),
            (F_SOURCE_GIVEN_TARGET, 1.0),
            (F_NGRAM_LM, 1.0),
            (F_NGRAM_LM2, 1.0),
            (F_AMR_LM, 1.0),
            (F_OOV, -5.0),
            (F_GLUE, -10.0),
        ] {
            w.set(name, v).expect("known feature");
        }
        w
    }
}

impl WeightVector {
    pub fn zeros() -> Self {
        WeightVector {
            values: [0.0; N_FEATURES],
        }
    }

    fn index(name: &str) -> Result<usize, WeightError> {
        FEATURES
            .iter()
            .position(|f| *f == name)
            .ok_or_else(|| WeightError::UnknownFeature(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<f64, WeightError> {
        Ok(self.values[Self::index(name)?])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), WeightError> {
        if !value.is_finite() {
            return Err(WeightError::NotFinite(name.to_string()));
        }
        self.values[Self::index(name)?] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURES.iter().copied().zip(self.values.iter().copied())
    }

    fn dot(&self, f: &Feats) -> f64 {
        self.values.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `name<TAB>value` per line, in feature order. Negative zero is
    /// written as `0`.
    pub fn to_text(&self) -> String {
        self.iter().map(|(n, v)| format!("{n}\t{}\n", v + 0.0)).collect()
    }

    /// Features missing from the text keep weight zero.
    pub fn from_text(text: &str) -> Result<Self, WeightError> {
        let mut w = WeightVector::zeros();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.split_once('\t').ok_or(WeightError::Format {
                line: i + 1,
                message: "expected name<TAB>value".into(),
            })?;
            let value: f64 = value.trim().parse().map_err(|_| WeightError::Format {
                line: i + 1,
                message: format!("bad number `{value}`"),
            })?;
            w.set(name.trim(), value)?;
        }
        Ok(w)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderConfig {
    /// Items kept per `(span, label)` cell; `None` keeps all.
    pub beam: Option<usize>,
    /// Hypotheses returned.
    pub kbest: usize,
    /// Goal items rescored with the AMR model.
    pub rescore_k: usize,
    /// Rounds of unary rule application per span.
    pub unary_rounds: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam: Some(100),
            kbest: 10,
            rescore_k: 500,
            unary_rounds: 4,
        }
    }
}

impl DecoderConfig {
    pub fn unbounded() -> Self {
        DecoderConfig {
            beam: None,
            kbest: usize::MAX,
            rescore_k: usize::MAX,
            unary_rounds: 8,
        }
    }
}

/// How an item was built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Rule(usize),
    Oov(String),
    Glue,
}

/// A derivation tree; children of a rule step are in variable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub step: Step,
    pub children: Vec<Arc<Derivation>>,
}

impl Derivation {
    /// Source words covered, rebuilt from the rules alone.
    pub fn source_yield(&self, g: &RuleGrammar) -> Vec<String> {
        match &self.step {
            Step::Rule(r) => g.rules()[*r]
                .source
                .iter()
                .flat_map(|s| match s {
                    Symbol::Term(t) => vec![t.clone()],
                    Symbol::Var(i) => self.children[*i].source_yield(g),
                })
                .collect(),
            Step::Oov(w) => vec![w.clone()],
            Step::Glue => self.children.iter().flat_map(|c| c.source_yield(g)).collect(),
        }
    }

    /// Target tree, rebuilt from the rules alone.
    pub fn tree(&self, g: &RuleGrammar) -> SbmtTree {
        match &self.step {
            Step::Rule(r) => {
                let kids: Vec<SbmtTree> = self.children.iter().map(|c| c.tree(g)).collect();
                let refs: Vec<&SbmtTree> = kids.iter().collect();
                g.rules()[*r].target.instantiate(&refs)
            }
            Step::Oov(w) => oov_tree(w),
            Step::Glue => {
                let mut kids: Vec<SbmtTree> = self.children.iter().map(|c| c.tree(g)).collect();
                match kids.len() {
                    0 => oov_tree(EMPTY_CONCEPT),
                    1 => kids.pop().expect("one fragment"),
                    _ => glue_tree(kids),
                }
            }
        }
    }

    pub fn rule_count(&self) -> usize {
        usize::from(matches!(self.step, Step::Rule(_)))
            + self.children.iter().map(|c| c.rule_count()).sum::<usize>()
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.step {
            Step::Rule(r) => write!(f, "r{r}")?,
            Step::Oov(w) => write!(f, "oov:{}", crate::text::quote(w))?,
            Step::Glue => f.write_str("glue")?,
        }
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn oov_tree(w: &str) -> SbmtTree {
    SbmtTree::node(INSTANCE_LABEL, vec![SbmtTree::identity_pre(w)])
}

fn glue_tree(fragments: Vec<SbmtTree>) -> SbmtTree {
    let mut kids = vec![SbmtTree::identity_pre(GLUE_CONCEPT)];
    for (i, f) in fragments.into_iter().enumerate() {
        kids.push(SbmtTree::identity_pre(&format!("snt{}", i + 1)));
        kids.push(f);
    }
    SbmtTree::node(INSTANCE_LABEL, kids)
}

/// The graph a decoded tree stands for. Trees that do not encode a graph
/// have their largest well-formed instance subtrees joined under a
/// multi-sentence root; with none, the result is a single empty instance.
pub fn derivation_to_amr(t: &SbmtTree) -> AmrGraph {
    if let Ok(g) = to_amr(t) {
        return g;
    }
    let mut parts = Vec::new();
    collect_valid(t, &mut parts);
    let tree = match parts.len() {
        0 => oov_tree(EMPTY_CONCEPT),
        1 => parts.pop().expect("one part"),
        _ => glue_tree(parts),
    };
    to_amr(&tree).expect("glue over valid fragments is valid")
}

fn collect_valid(t: &SbmtTree, out: &mut Vec<SbmtTree>) {
    if is_instance(t) && to_amr(t).is_ok() {
        out.push(t.clone());
        return;
    }
    for c in t.children() {
        collect_valid(c, out);
    }
}

/// One output of the decoder.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub tree: SbmtTree,
    pub amr: AmrGraph,
    pub score: f64,
    pub features: BTreeMap<String, f64>,
    pub derivation: Arc<Derivation>,
    /// Built by the glue fallback.
    pub glue: bool,
}

impl Hypothesis {
    pub fn amrese(&self) -> Vec<String> {
        crate::transform::yield_amrese(&self.tree)
    }
}

/// Decoder output for one sentence.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// Sorted by descending score; never empty.
    pub hypotheses: Vec<Hypothesis>,
    /// Items created over the whole chart.
    pub items: usize,
}

impl DecodeResult {
    pub fn best(&self) -> &Hypothesis {
        &self.hypotheses[0]
    }
}

/// `sentId ||| score ||| AMRese ||| PENMAN` lines.
pub fn format_kbest(sent_id: usize, hyps: &[Hypothesis]) -> String {
    hyps.iter()
        .map(|h| {
            format!(
                "{sent_id} ||| {:.6} ||| {} ||| {}\n",
                h.score,
                h.amrese().join(" "),
                crate::amr::emit_penman_line(&h.amr)
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Item {
    label: Arc<str>,
    tree: Arc<SbmtTree>,
    /// Yield as symbol ids of each n-gram model.
    words: Arc<[Vec<u32>]>,
    feats: Feats,
    score: f64,
    deriv: Arc<Derivation>,
}

fn better(a: &Item, b: &Item) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.tree.cmp(&b.tree))
}

#[derive(Debug, Clone)]
enum Pat {
    Term(String),
    Var(usize, Arc<str>),
}

#[derive(Debug)]
struct CompiledRule {
    pattern: Vec<Pat>,
    root: Arc<str>,
    feats: Feats,
}

type Cell = HashMap<Arc<str>, Vec<Item>>;

/// `(var, lo, hi, label)`: rule variable `var` covers `[lo, hi)` as `label`.
type VarSpan = (usize, usize, usize, Arc<str>);

/// A grammar and models ready to decode many sentences.
pub struct Decoder<'a> {
    grammar: &'a RuleGrammar,
    /// N-gram models with the feature slot each one fills.
    ngrams: Vec<(usize, &'a NgramModel)>,
    amr: Option<&'a AmrTreeModel>,
    use_categories: bool,
    weights: WeightVector,
    config: DecoderConfig,
    rules: Vec<CompiledRule>,
    /// Non-unary rules by first source terminal; the empty key holds rules
    /// starting with a variable.
    by_first: HashMap<String, Vec<usize>>,
    unary: Vec<usize>,
    known_words: HashSet<String>,
}

impl<'a> Decoder<'a> {
    pub fn new(
        grammar: &'a RuleGrammar,
        ngram: Option<&'a NgramModel>,
        amr: Option<&'a AmrTreeModel>,
        weights: WeightVector,
        config: DecoderConfig,
    ) -> Self {
        let mut rules = Vec::with_capacity(grammar.len());
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        let mut unary = Vec::new();
        let mut known_words = HashSet::new();
        for (i, r) in grammar.rules().iter().enumerate() {
            let labels = r.target.var_labels();
            let pattern: Vec<Pat> = r
                .source
                .iter()
                .map(|s| match s {
                    Symbol::Term(t) => {
                        known_words.insert(t.clone());
                        Pat::Term(t.clone())
                    }
                    Symbol::Var(v) => Pat::Var(*v, Arc::from(labels[*v].as_str())),
                })
                .collect();
            let mut feats = [0.0; N_FEATURES];
            for (j, name) in RULE_FEATURES.iter().enumerate() {
                let v = r.feature(name);
                feats[j] = match *name {
                    F_RULE_GIVEN_ROOT | F_SOURCE_GIVEN_TARGET | F_COUNT => {
                        if v > 0.0 {
                            v.ln()
                        } else {
                            0.0
                        }
                    }
                    _ => v,
                };
            }
            match pattern.as_slice() {
                [Pat::Var(..)] => unary.push(i),
                [Pat::Term(t), ..] => by_first.entry(t.clone()).or_default().push(i),
                [Pat::Var(..), ..] => by_first.entry(String::new()).or_default().push(i),
                [] => {}
            }
            rules.push(CompiledRule {
                pattern,
                root: Arc::from(r.root.as_str()),
                feats,
            });
        }
        Decoder {
            grammar,
            ngrams: ngram.map(|m| (I_NGRAM, m)).into_iter().collect(),
            amr,
            use_categories: false,
            weights,
            config,
            rules,
            by_first,
            unary,
            known_words,
        }
    }

    /// Score graphs with the category-conditioned AMR model tables.
    pub fn with_categories(mut self, on: bool) -> Self {
        self.use_categories = on;
        self
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// Add a second AMRese model, scored as its own feature.
    pub fn with_second_ngram(mut self, m: Option<&'a NgramModel>) -> Self {
        self.ngrams.retain(|(slot, _)| *slot != I_NGRAM2);
        if let Some(m) = m {
            self.ngrams.push((I_NGRAM2, m));
        }
        self
    }

    fn word_ids(&self, w: &str) -> Vec<u32> {
        self.ngrams.iter().map(|(_, m)| m.id(w)).collect()
    }

    fn finish(&self, mut it: Item) -> Item {
        it.score = self.weights.dot(&it.feats);
        it
    }

    /// Apply rule `r` to children given in variable order.
    fn apply(&self, r: usize, kids: &[&Item]) -> Item {
        let rule = &self.grammar.rules()[r];
        let compiled = &self.rules[r];
        let trees: Vec<&SbmtTree> = kids.iter().map(|k| k.tree.as_ref()).collect();
        let tree = rule.target.instantiate(&trees);
        let mut feats = compiled.feats;
        for k in kids {
            for (f, v) in feats.iter_mut().zip(&k.feats) {
                *f += v;
            }
        }
        let frontier = rule.target.frontier();
        let mut all_words = Vec::with_capacity(self.ngrams.len());
        for (m_i, (slot, m)) in self.ngrams.iter().enumerate() {
            let ctx = m.order() - 1;
            let mut words: Vec<u32> = Vec::new();
            let mut lm = 0.0;
            for sym in &frontier {
                match sym {
                    Symbol::Term(t) => {
                        let id = m.id(t);
                        if words.len() >= ctx {
                            lm += m.logprob_id(&words[words.len() - ctx..], id);
                        }
                        words.push(id);
                    }
                    Symbol::Var(i) => {
                        let child = &kids[*i].words[m_i];
                        let offset = words.len();
                        words.extend_from_slice(child);
                        for q in 0..child.len().min(ctx) {
                            let p = offset + q;
                            if p >= ctx {
                                lm += m.logprob_id(&words[p - ctx..p], words[p]);
                            }
                        }
                    }
                }
            }
            feats[*slot] += lm;
            all_words.push(words);
        }
        self.finish(Item {
            label: compiled.root.clone(),
            tree: Arc::new(tree),
            words: all_words.into(),
            feats,
            score: 0.0,
            deriv: Arc::new(Derivation {
                step: Step::Rule(r),
                children: kids.iter().map(|k| k.deriv.clone()).collect(),
            }),
        })
    }

    fn oov_item(&self, w: &str) -> Item {
        let mut feats = [0.0; N_FEATURES];
        feats[I_OOV] = 1.0;
        self.finish(Item {
            label: Arc::from(INSTANCE_LABEL),
            tree: Arc::new(oov_tree(w)),
            words: self.word_ids(w).into_iter().map(|id| vec![id]).collect(),
            feats,
            score: 0.0,
            deriv: Arc::new(Derivation {
                step: Step::Oov(w.to_string()),
                children: Vec::new(),
            }),
        })
    }

    /// Ways to split `[start, end)` among `pattern`.
    #[allow(clippy::too_many_arguments)]
    fn matches(
        &self,
        chart: &HashMap<(usize, usize), Cell>,
        src: &[String],
        pattern: &[Pat],
        start: usize,
        end: usize,
        acc: &mut Vec<VarSpan>,
        out: &mut Vec<Vec<VarSpan>>,
    ) {
        let Some((first, rest)) = pattern.split_first() else {
            if start == end {
                out.push(acc.clone());
            }
            return;
        };
        if end - start < pattern.len() {
            return;
        }
        match first {
            Pat::Term(t) => {
                if &src[start] == t {
                    self.matches(chart, src, rest, start + 1, end, acc, out);
                }
            }
            Pat::Var(v, label) => {
                let last = if rest.is_empty() { end } else { end - rest.len() };
                let first_split = if rest.is_empty() { end } else { start + 1 };
                for k in first_split..=last {
                    let present = chart
                        .get(&(start, k))
                        .and_then(|c| c.get(label))
                        .is_some_and(|items| !items.is_empty());
                    if present {
                        acc.push((*v, start, k, label.clone()));
                        self.matches(chart, src, rest, k, end, acc, out);
                        acc.pop();
                    }
                }
            }
        }
    }

    /// Child combinations in best-first order, at most `limit`.
    fn combos(lists: &[&[Item]], limit: Option<usize>) -> Vec<Vec<usize>> {
        if lists.iter().any(|l| l.is_empty()) {
            return Vec::new();
        }
        let Some(limit) = limit else {
            let mut out = vec![Vec::new()];
            for l in lists {
                out = out
                    .into_iter()
                    .flat_map(|prefix| {
                        (0..l.len()).map(move |i| {
                            let mut p = prefix.clone();
                            p.push(i);
                            p
                        })
                    })
                    .collect();
            }
            return out;
        };
        #[derive(PartialEq)]
        struct Entry(f64, Vec<usize>);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, o: &Self) -> Ordering {
                self.0.total_cmp(&o.0).then_with(|| o.1.cmp(&self.1))
            }
        }
        let score = |idx: &[usize]| -> f64 { idx.iter().zip(lists).map(|(&i, l)| l[i].score).sum() };
        let mut heap = BinaryHeap::new();
        let mut seen = HashSet::new();
        let start = vec![0; lists.len()];
        heap.push(Entry(score(&start), start.clone()));
        seen.insert(start);
        let mut out = Vec::new();
        while let Some(Entry(_, idx)) = heap.pop() {
            for d in 0..idx.len() {
                if idx[d] + 1 < lists[d].len() {
                    let mut n = idx.clone();
                    n[d] += 1;
                    if seen.insert(n.clone()) {
                        heap.push(Entry(score(&n), n));
                    }
                }
            }
            out.push(idx);
            if out.len() >= limit {
                break;
            }
        }
        out
    }

    fn insert(
        pending: &mut HashMap<Arc<str>, HashMap<Arc<SbmtTree>, Item>>,
        allowed: Option<&HashSet<SbmtTree>>,
        it: Item,
    ) -> bool {
        if allowed.is_some_and(|a| !a.contains(it.tree.as_ref())) {
            return false;
        }
        let cell = pending.entry(it.label.clone()).or_default();
        match cell.get(&it.tree) {
            Some(old) if old.score >= it.score => false,
            _ => {
                cell.insert(it.tree.clone(), it);
                true
            }
        }
    }

    fn prune(&self, pending: HashMap<Arc<str>, HashMap<Arc<SbmtTree>, Item>>, beam: Option<usize>) -> Cell {
        pending
            .into_iter()
            .map(|(label, items)| {
                let mut v: Vec<Item> = items.into_values().collect();
                v.sort_by(better);
                if let Some(b) = beam {
                    v.truncate(b);
                }
                (label, v)
            })
            .collect()
    }

    /// Fill the chart. `allowed` restricts items to the given subtrees.
    fn chart(
        &self,
        src: &[String],
        allowed: Option<&HashSet<SbmtTree>>,
        oov: bool,
    ) -> (HashMap<(usize, usize), Cell>, usize) {
        let n = src.len();
        let beam = if allowed.is_some() { None } else { self.config.beam };
        let rounds = if allowed.is_some() {
            usize::MAX
        } else {
            self.config.unary_rounds
        };
        let mut chart: HashMap<(usize, usize), Cell> = HashMap::new();
        let mut created = 0usize;
        let no_rules: Vec<usize> = Vec::new();
        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len;
                let mut pending: HashMap<Arc<str>, HashMap<Arc<SbmtTree>, Item>> = HashMap::new();
                if oov && len == 1 && !self.known_words.contains(&src[i]) {
                    created += 1;
                    Self::insert(&mut pending, allowed, self.oov_item(&src[i]));
                }
                let candidates = self
                    .by_first
                    .get(&src[i])
                    .unwrap_or(&no_rules)
                    .iter()
                    .chain(self.by_first.get("").unwrap_or(&no_rules));
                for &r in candidates {
                    let pattern = &self.rules[r].pattern;
                    let mut splits = Vec::new();
                    self.matches(&chart, src, pattern, i, j, &mut Vec::new(), &mut splits);
                    for split in splits {
                        let mut by_var: Vec<&VarSpan> = split.iter().collect();
                        by_var.sort_by_key(|s| s.0);
                        let lists: Vec<&[Item]> = by_var
                            .iter()
                            .map(|(_, lo, hi, label)| chart[&(*lo, *hi)][label].as_slice())
                            .collect();
                        for combo in Self::combos(&lists, beam) {
                            let kids: Vec<&Item> = combo.iter().zip(&lists).map(|(&c, l)| &l[c]).collect();
                            created += 1;
                            Self::insert(&mut pending, allowed, self.apply(r, &kids));
                        }
                    }
                }
                let mut cell = self.prune(pending, beam);
                let mut fresh: Vec<Item> = cell.values().flatten().cloned().collect();
                let mut round = 0;
                while !fresh.is_empty() && round < rounds {
                    round += 1;
                    let mut pending: HashMap<Arc<str>, HashMap<Arc<SbmtTree>, Item>> = HashMap::new();
                    for items in cell.values() {
                        for it in items {
                            Self::insert(&mut pending, None, it.clone());
                        }
                    }
                    let mut next = Vec::new();
                    for &r in &self.unary {
                        let Pat::Var(_, label) = &self.rules[r].pattern[0] else {
                            continue;
                        };
                        for it in fresh.iter().filter(|it| &it.label == label) {
                            created += 1;
                            let new = self.apply(r, &[it]);
                            if Self::insert(&mut pending, allowed, new.clone()) {
                                next.push(new);
                            }
                        }
                    }
                    cell = self.prune(pending, beam);
                    // only items that survived pruning propagate further
                    next.retain(|it| {
                        cell.get(&it.label)
                            .is_some_and(|v| v.iter().any(|x| x.tree == it.tree && x.score == it.score))
                    });
                    fresh = next;
                }
                if !cell.is_empty() {
                    chart.insert((i, j), cell);
                }
            }
        }
        (chart, created)
    }

    /// Add sentence-boundary LM terms and the AMR model to a complete item.
    fn complete(&self, it: &Item, glue: bool) -> Option<Hypothesis> {
        let amr = to_amr(&it.tree).ok()?;
        let mut feats = it.feats;
        for (m_i, (slot, m)) in self.ngrams.iter().enumerate() {
            let ctx = m.order() - 1;
            let words = &it.words[m_i];
            let mut padded: Vec<u32> = vec![m.bos(); ctx];
            padded.extend_from_slice(words);
            padded.push(m.eos());
            let mut extra = 0.0;
            for q in 0..=words.len() {
                if q < ctx || q == words.len() {
                    let p = q + ctx;
                    extra += m.logprob_id(&padded[p - ctx..p], padded[p]);
                }
            }
            feats[*slot] += extra;
        }
        if let Some(m) = self.amr {
            feats[I_AMR] = m.score_amr(&amr, self.use_categories).ok()?;
        }
        let score = self.weights.dot(&feats);
        Some(Hypothesis {
            tree: it.tree.as_ref().clone(),
            amr,
            score,
            features: FEATURES
                .iter()
                .zip(feats)
                .map(|(n, v)| (n.to_string(), v))
                .collect(),
            derivation: it.deriv.clone(),
            glue,
        })
    }

    pub fn decode(&self, src: &[String]) -> DecodeResult {
        let n = src.len();
        if n == 0 {
            let it = self.oov_item(EMPTY_CONCEPT);
            let mut h = self.complete(&it, true).expect("single instance is valid");
            h.derivation = Arc::new(Derivation {
                step: Step::Glue,
                children: Vec::new(),
            });
            return DecodeResult {
                hypotheses: vec![h],
                items: 0,
            };
        }
        let (chart, items) = self.chart(src, None, true);
        let mut goal: Vec<&Item> = chart
            .get(&(0, n))
            .and_then(|c| c.get(INSTANCE_LABEL))
            .map(|v| v.iter().collect())
            .unwrap_or_default();
        goal.truncate(self.config.rescore_k);
        let mut hyps: Vec<Hypothesis> = goal
            .into_iter()
            .filter_map(|it| self.complete(it, false))
            .collect();
        if hyps.is_empty() {
            hyps.push(self.glue(src, &chart));
        }
        hyps.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tree.cmp(&b.tree)));
        hyps.truncate(self.config.kbest.max(1));
        DecodeResult {
            hypotheses: hyps,
            items,
        }
    }

    /// Best left-to-right cover by well-formed instance items.
    fn glue(&self, src: &[String], chart: &HashMap<(usize, usize), Cell>) -> Hypothesis {
        let n = src.len();
        let mut best: Vec<Option<(f64, usize, Item)>> = vec![None; n + 1];
        let mut reach = vec![f64::NEG_INFINITY; n + 1];
        reach[0] = 0.0;
        for j in 1..=n {
            for i in 0..j {
                if reach[i] == f64::NEG_INFINITY {
                    continue;
                }
                let mut cands: Vec<Item> = chart
                    .get(&(i, j))
                    .and_then(|c| c.get(INSTANCE_LABEL))
                    .map(|v| {
                        v.iter()
                            .filter(|it| to_amr(&it.tree).is_ok())
                            .take(1)
                            .cloned()
                            .collect()
                    })
                    .unwrap_or_default();
                if cands.is_empty() && j == i + 1 {
                    cands.push(self.oov_item(&src[i]));
                }
                if let Some(it) = cands.into_iter().next() {
                    let s = reach[i] + it.score + self.weights.values[I_GLUE];
                    if s > reach[j] {
                        reach[j] = s;
                        best[j] = Some((s, i, it));
                    }
                }
            }
        }
        let mut parts = Vec::new();
        let mut j = n;
        while j > 0 {
            let (_, i, it) = best[j].take().expect("every position is reachable");
            parts.push(it);
            j = i;
        }
        parts.reverse();
        let mut feats = [0.0; N_FEATURES];
        for p in &parts {
            for (f, v) in feats.iter_mut().zip(&p.feats) {
                *f += v;
            }
        }
        feats[I_GLUE] = parts.len() as f64;
        let tree = if parts.len() == 1 {
            parts[0].tree.as_ref().clone()
        } else {
            glue_tree(parts.iter().map(|p| p.tree.as_ref().clone()).collect())
        };
        let mut it = Item {
            label: Arc::from(INSTANCE_LABEL),
            tree: Arc::new(tree),
            words: Vec::new().into(),
            feats,
            score: 0.0,
            deriv: Arc::new(Derivation {
                step: Step::Glue,
                children: parts.iter().map(|p| p.deriv.clone()).collect(),
            }),
        };
        // the joined yield is scored from scratch
        let leaves = it.tree.leaves();
        for (slot, m) in &self.ngrams {
            it.feats[*slot] = m.score_sequence(&leaves);
        }
        let amr = to_amr(&it.tree).expect("glue over valid fragments is valid");
        if let Some(m) = self.amr {
            it.feats[I_AMR] = m.score_amr(&amr, self.use_categories).unwrap_or(0.0);
        }
        Hypothesis {
            score: self.weights.dot(&it.feats),
            features: FEATURES
                .iter()
                .zip(it.feats)
                .map(|(n, v)| (n.to_string(), v))
                .collect(),
            tree: it.tree.as_ref().clone(),
            amr,
            derivation: it.deriv,
            glue: true,
        }
    }

    /// A derivation of exactly `target` over `src` using grammar rules only.
    pub fn derive_exactly(&self, src: &[String], target: &SbmtTree) -> Option<Arc<Derivation>> {
        let mut allowed = HashSet::new();
        fn subtrees(t: &SbmtTree, out: &mut HashSet<SbmtTree>) {
            if t.is_leaf() {
                return;
            }
            out.insert(t.clone());
            for c in t.children() {
                subtrees(c, out);
            }
        }
        subtrees(target, &mut allowed);
        let (chart, _) = self.chart(src, Some(&allowed), false);
        chart
            .get(&(0, src.len()))?
            .get(target.label())?
            .iter()
            .find(|it| it.tree.as_ref() == target)
            .map(|it| it.deriv.clone())
    }

    /// Decode many sentences in parallel; output order follows input.
    pub fn decode_all(&self, sentences: &[Vec<String>]) -> Vec<DecodeResult> {
        use rayon::prelude::*;
        sentences.par_iter().map(|s| self.decode(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::emit_penman_line;
    use crate::ghkm::{score_grammar, RuleGrammar};
    use crate::lm::train_ngram;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn grammar(lines: &[&str]) -> RuleGrammar {
        let text: String = lines.iter().map(|l| format!("{l}\t\n")).collect();
        score_grammar(&RuleGrammar::from_text(&text).unwrap())
    }

    #[test]
    fn oov_word_becomes_an_instance() {
        let g = RuleGrammar::new();
        let d = Decoder::new(&g, None, None, WeightVector::default(), DecoderConfig::default());
        let r = d.decode(&toks("zebra"));
        assert_eq!(emit_penman_line(&r.best().amr), "(v0 / zebra)");
        assert!(!r.best().glue);
        assert_eq!(r.best().features[F_OOV], 1.0);
    }

    #[test]
    fn empty_sentence() {
        let g = RuleGrammar::new();
        let d = Decoder::new(&g, None, None, WeightVector::default(), DecoderConfig::default());
        let r = d.decode(&[]);
        assert_eq!(emit_penman_line(&r.best().amr), "(v0 / amr-empty)");
        assert!(r.best().glue);
    }

    #[test]
    fn glue_joins_fragments() {
        let g = grammar(&["ARG0P\tfoo\t(ARG0P ARG0)"]);
        let d = Decoder::new(&g, None, None, WeightVector::default(), DecoderConfig::default());
        let r = d.decode(&toks("foo bar"));
        let h = r.best();
        assert!(h.glue);
        assert_eq!(
            emit_penman_line(&h.amr),
            "(v0 / multi-sentence :snt1 (v1 / foo) :snt2 (v2 / bar))"
        );
        assert_eq!(h.derivation.tree(&g), h.tree);
        assert_eq!(h.derivation.source_yield(&g), toks("foo bar"));
    }

    #[test]
    fn rule_composition() {
        let g = grammar(&[
            "X\tthe x0 sleeps\t(X (sleep-01P sleep-01) (ARG0P ARG0) x0:X)",
            "X\tcat\t(X (catP cat))",
        ]);
        let d = Decoder::new(&g, None, None, WeightVector::default(), DecoderConfig::default());
        let r = d.decode(&toks("the cat sleeps"));
        let h = r.best();
        assert!(!h.glue);
        assert_eq!(emit_penman_line(&h.amr), "(v0 / sleep-01 :ARG0 (v1 / cat))");
        assert_eq!(h.derivation.to_string(), "r0(r1)");
        assert_eq!(h.derivation.source_yield(&g), toks("the cat sleeps"));
    }

    #[test]
    fn ngram_weight_sign_decides_between_readings() {
        // two readings of `a`; the LM prefers `dog`
        let g = grammar(&["X\ta\t(X (dogP dog))", "X\ta\t(X (catP cat))"]);
        let lm = train_ngram(&[toks("dog"), toks("dog"), toks("cat")], 2).unwrap();
        let mut w = WeightVector::zeros();
        w.set(F_NGRAM_LM, 1.0).unwrap();
        let best = |w: &WeightVector| {
            let d = Decoder::new(&g, Some(&lm), None, w.clone(), DecoderConfig::default());
            emit_penman_line(&d.decode(&toks("a")).best().amr)
        };
        assert_eq!(best(&w), "(v0 / dog)");
        w.set(F_NGRAM_LM, -1.0).unwrap();
        assert_eq!(best(&w), "(v0 / cat)");
    }

    #[test]
    fn lm_feature_equals_sentence_score() {
        let g = grammar(&[
            "X\tx0 and x1\t(X (andP and) (op1P op1) x0:X (op2P op2) x1:X)",
            "X\tcat\t(X (catP cat))",
            "X\tdog\t(X (dogP dog))",
        ]);
        let lm = train_ngram(&[toks("and op1 cat op2 dog"), toks("cat")], 3).unwrap();
        let d = Decoder::new(
            &g,
            Some(&lm),
            None,
            WeightVector::default(),
            DecoderConfig::default(),
        );
        let r = d.decode(&toks("dog and cat"));
        let h = r.best();
        let want = lm.score_sequence(&h.amrese());
        assert!((h.features[F_NGRAM_LM] - want).abs() < 1e-9);
    }

    #[test]
    fn forced_derivation() {
        let g = grammar(&[
            "X\tx0 sleeps\t(X (sleep-01P sleep-01) (ARG0P ARG0) x0:X)",
            "X\tcat\t(X (catP cat))",
            "X\tcat\t(X (dogP dog))",
        ]);
        let d = Decoder::new(&g, None, None, WeightVector::default(), DecoderConfig::default());
        let target: SbmtTree = "(X (sleep-01P sleep-01) (ARG0P ARG0) (X (dogP dog)))"
            .parse()
            .unwrap();
        let der = d.derive_exactly(&toks("cat sleeps"), &target).unwrap();
        assert_eq!(der.tree(&g), target);
        let other: SbmtTree = "(X (sleep-01P sleep-01) (ARG0P ARG0) (X (cowP cow)))"
            .parse()
            .unwrap();
        assert!(d.derive_exactly(&toks("cat sleeps"), &other).is_none());
    }

    #[test]
    fn kbest_is_sorted_and_distinct() {
        let g = grammar(&[
            "X\ta\t(X (dogP dog))",
            "X\ta\t(X (catP cat))",
            "X\ta\t(X (cowP cow))",
        ]);
        let d = Decoder::new(&g, None, None, WeightVector::default(), DecoderConfig::default());
        let r = d.decode(&toks("a"));
        assert_eq!(r.hypotheses.len(), 3);
        for w in r.hypotheses.windows(2) {
            assert!(w[0].score >= w[1].score);
            assert_ne!(w[0].tree, w[1].tree);
        }
        let text = format_kbest(7, &r.hypotheses);
        assert!(text
            .lines()
            .all(|l| l.starts_with("7 ||| ") && l.split(" ||| ").count() == 4));
    }

    #[test]
    fn malformed_trees_become_multi_sentence() {
        let t: SbmtTree = "(ARG1 (X (catP cat)) (X (dogP dog)))".parse().unwrap();
        assert_eq!(
            emit_penman_line(&derivation_to_amr(&t)),
            "(v0 / multi-sentence :snt1 (v1 / cat) :snt2 (v2 / dog))"
        );
        let t: SbmtTree = "(ARG1P ARG1)".parse().unwrap();
        assert_eq!(emit_penman_line(&derivation_to_amr(&t)), "(v0 / amr-empty)");
    }

    #[test]
    fn weights_text() {
        let w = WeightVector::default();
        assert_eq!(WeightVector::from_text(&w.to_text()).unwrap(), w);
        assert!(matches!(
            WeightVector::from_text("bogus\t1"),
            Err(WeightError::UnknownFeature(_))
        ));
        assert!(WeightVector::from_text("oov\tnan").is_err());
        assert!(WeightVector::from_text("oov 1").is_err());
    }
}
