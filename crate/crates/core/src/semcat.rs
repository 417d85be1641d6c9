//! Semantic category preterminals.
//!
//! Every concept is mapped to one of a set of salient taxonomy categories.
//! Smoothed sense counts of the concept's lemma are propagated up the is-a
//! hierarchy, summing where paths meet; each salient category reached is
//! scored by its propagated count divided by how many concept types reach
//! it at all, and the best scoring category wins.
//!
//! Input files:
//!
//! * hierarchy: `child<TAB>parent` per line
//! * senses: `lemma<TAB>category<TAB>count` per line
//! * salient: one category per line
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::ptr;
use std::sync::RwLock;

use thiserror::Error;

use crate::transform::{instance_parts, is_instance, Part};
use crate::tree::SbmtTree;

/// Category for concepts the taxonomy knows nothing about.
pub const FALLBACK_CATEGORY: &str = "OTHER";

/// Added to every sense count before propagation.
pub const SENSE_SMOOTHING: f64 = 0.1;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("cycle in hierarchy through `{0}`")]
    Cycle(String),
    #[error("salient category `{0}` is not in the hierarchy")]
    UnknownSalient(String),
    #[error("{file}:{line}: malformed line `{text}`")]
    Malformed {
        file: &'static str,
        line: usize,
        text: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// An is-a DAG with salient categories and per-lemma sense counts.
#[derive(Debug)]
pub struct SemanticTaxonomy {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    /// Position of each node in a child-before-parent order.
    topo_rank: Vec<usize>,
    depth: Vec<usize>,
    salient: BTreeSet<usize>,
    senses: HashMap<String, Vec<(usize, f64)>>,
    prevalence: HashMap<usize, usize>,
    memo: RwLock<HashMap<String, String>>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

impl SemanticTaxonomy {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        self.parents.push(Vec::new());
        i
    }

    /// Parse the three input texts and build the prevalence table over the
    /// lemmas of the senses file.
    pub fn from_texts(hierarchy: &str, senses: &str, salient: &str) -> Result<Self, TaxonomyError> {
        let mut tax = SemanticTaxonomy {
            names: Vec::new(),
            index: HashMap::new(),
            parents: Vec::new(),
            topo_rank: Vec::new(),
            depth: Vec::new(),
            salient: BTreeSet::new(),
            senses: HashMap::new(),
            prevalence: HashMap::new(),
            memo: RwLock::new(HashMap::new()),
        };
        for (line, text) in content_lines(hierarchy) {
            let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
            match fields.as_slice() {
                [child, parent] if !child.is_empty() && !parent.is_empty() => {
                    let c = tax.intern(child);
                    let p = tax.intern(parent);
                    if !tax.parents[c].contains(&p) {
                        tax.parents[c].push(p);
                    }
                }
                _ => {
                    return Err(TaxonomyError::Malformed {
                        file: "hierarchy",
                        line,
                        text: text.to_string(),
                    })
                }
            }
        }
        let mut merged: BTreeMap<(String, usize), f64> = BTreeMap::new();
        for (line, text) in content_lines(senses) {
            let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
            let malformed = || TaxonomyError::Malformed {
                file: "senses",
                line,
                text: text.to_string(),
            };
            match fields.as_slice() {
                [lemma, cat, count] if !lemma.is_empty() && !cat.is_empty() => {
                    let count: f64 = count.parse().map_err(|_| malformed())?;
                    if !(count >= 0.0 && count.is_finite()) {
                        return Err(malformed());
                    }
                    let node = tax.intern(cat);
                    *merged.entry((lemma.to_string(), node)).or_insert(0.0) += count;
                }
                _ => return Err(malformed()),
            }
        }
        for ((lemma, node), count) in merged {
            tax.senses.entry(lemma).or_default().push((node, count));
        }
        for (_, text) in content_lines(salient) {
            let name = text.trim();
            let node = *tax
                .index
                .get(name)
                .ok_or_else(|| TaxonomyError::UnknownSalient(name.to_string()))?;
            tax.salient.insert(node);
        }
        tax.order_nodes()?;
        let lemmas: Vec<String> = tax.senses.keys().cloned().collect();
        tax.rebuild_prevalence(lemmas.iter().map(String::as_str));
        Ok(tax)
    }

    pub fn from_files(hierarchy: &Path, senses: &Path, salient: &Path) -> Result<Self, TaxonomyError> {
        Self::from_texts(
            &std::fs::read_to_string(hierarchy)?,
            &std::fs::read_to_string(senses)?,
            &std::fs::read_to_string(salient)?,
        )
    }

    /// Topological ranks (children first) and depth below the roots.
    fn order_nodes(&mut self) -> Result<(), TaxonomyError> {
        let n = self.names.len();
        let mut indegree = vec![0usize; n]; // number of children
        for ps in &self.parents {
            for &p in ps {
                indegree[p] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(x) = ready.pop() {
            order.push(x);
            for &p in &self.parents[x] {
                indegree[p] -= 1;
                if indegree[p] == 0 {
                    ready.push(p);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
            return Err(TaxonomyError::Cycle(self.names[stuck].clone()));
        }
        self.topo_rank = vec![0; n];
        for (rank, &x) in order.iter().enumerate() {
            self.topo_rank[x] = rank;
        }
        self.depth = vec![0; n];
        for &x in order.iter().rev() {
            self.depth[x] = self.parents[x]
                .iter()
                .map(|&p| self.depth[p] + 1)
                .max()
                .unwrap_or(0);
        }
        Ok(())
    }

    /// Recount, for every salient category, how many of `concepts` (as
    /// distinct lemmas) propagate to it.
    pub fn rebuild_prevalence<'a>(&mut self, concepts: impl IntoIterator<Item = &'a str>) {
        let lemmas: BTreeSet<&str> = concepts.into_iter().map(lemma_of).collect();
        let mut prevalence = HashMap::new();
        for lemma in lemmas {
            for (node, count) in self.propagate_nodes(lemma) {
                if count > 0.0 && self.salient.contains(&node) {
                    *prevalence.entry(node).or_insert(0) += 1;
                }
            }
        }
        self.prevalence = prevalence;
        self.memo.write().unwrap_or_else(|e| e.into_inner()).clear();
    }

    fn propagate_nodes(&self, lemma: &str) -> HashMap<usize, f64> {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        let Some(senses) = self.senses.get(lemma) else {
            return counts;
        };
        let mut reach: HashSet<usize> = HashSet::new();
        let mut stack: Vec<usize> = Vec::new();
        for &(node, count) in senses {
            *counts.entry(node).or_insert(0.0) += count + SENSE_SMOOTHING;
            stack.push(node);
        }
        while let Some(x) = stack.pop() {
            if reach.insert(x) {
                stack.extend(self.parents[x].iter().copied());
            }
        }
        let mut order: Vec<usize> = reach.into_iter().collect();
        order.sort_by_key(|&x| self.topo_rank[x]);
        for x in order {
            let c = counts.get(&x).copied().unwrap_or(0.0);
            for &p in &self.parents[x] {
                *counts.entry(p).or_insert(0.0) += c;
            }
        }
        counts
    }

    /// Propagated smoothed count of a concept at every category it reaches.
    pub fn propagate(&self, concept: &str) -> BTreeMap<String, f64> {
        self.propagate_nodes(lemma_of(concept))
            .into_iter()
            .map(|(n, c)| (self.names[n].clone(), c))
            .collect()
    }

    /// Number of concept types that reach a salient category.
    pub fn prevalence(&self, category: &str) -> usize {
        self.index
            .get(category)
            .and_then(|n| self.prevalence.get(n))
            .copied()
            .unwrap_or(0)
    }

    /// Score of every salient category reached by `concept`.
    pub fn weights(&self, concept: &str) -> BTreeMap<String, f64> {
        self.propagate_nodes(lemma_of(concept))
            .into_iter()
            .filter(|(n, c)| *c > 0.0 && self.salient.contains(n))
            .filter_map(|(n, c)| {
                let prev = *self.prevalence.get(&n)?;
                Some((self.names[n].clone(), c / prev as f64))
            })
            .collect()
    }

    pub fn depth(&self, category: &str) -> Option<usize> {
        self.index.get(category).map(|&n| self.depth[n])
    }

    pub fn is_salient(&self, category: &str) -> bool {
        self.index.get(category).is_some_and(|n| self.salient.contains(n))
    }

    /// Highest weighted salient category; ties go to the deeper category,
    /// then to the lexicographically smaller name.
    pub fn assign_category(&self, concept: &str) -> String {
        if let Some(hit) = self.memo.read().unwrap_or_else(|e| e.into_inner()).get(concept) {
            return hit.clone();
        }
        let mut best: Option<(f64, usize, String)> = None;
        for (name, w) in self.weights(concept) {
            let d = self.depth[self.index[&name]];
            let better = match &best {
                None => true,
                Some((bw, bd, bn)) => w > *bw || (w == *bw && (d > *bd || (d == *bd && name < *bn))),
            };
            if better {
                best = Some((w, d, name));
            }
        }
        let cat = best
            .map(|(_, _, n)| n)
            .unwrap_or_else(|| FALLBACK_CATEGORY.to_string());
        self.memo
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(concept.to_string(), cat.clone());
        cat
    }
}

/// Strip a PropBank-style sense suffix: `fear-01` → `fear`.
pub fn lemma_of(concept: &str) -> &str {
    match concept.rsplit_once('-') {
        Some((lemma, sense))
            if !lemma.is_empty() && !sense.is_empty() && sense.bytes().all(|b| b.is_ascii_digit()) =>
        {
            lemma
        }
        _ => concept,
    }
}

/// Replace every concept preterminal label by the concept's category.
pub fn apply_categories(t: &SbmtTree, tax: &SemanticTaxonomy) -> SbmtTree {
    let mut concepts: HashSet<*const SbmtTree> = HashSet::new();
    collect_concepts(t, &mut concepts);
    rebuild(t, &concepts, tax)
}

fn collect_concepts(t: &SbmtTree, out: &mut HashSet<*const SbmtTree>) {
    if is_instance(t) {
        if let Ok(parts) = instance_parts(t) {
            for p in parts {
                if let Part::Concept(c) = p {
                    out.insert(ptr::from_ref(c));
                }
            }
        }
    }
    for c in t.children() {
        collect_concepts(c, out);
    }
}

fn rebuild(t: &SbmtTree, concepts: &HashSet<*const SbmtTree>, tax: &SemanticTaxonomy) -> SbmtTree {
    match t {
        SbmtTree::Leaf(_) => t.clone(),
        SbmtTree::Node { label, children } => {
            if concepts.contains(&ptr::from_ref(t)) {
                let tok = t.pre_token().unwrap_or_default();
                return SbmtTree::pre(tax.assign_category(tok), tok);
            }
            SbmtTree::node(
                label.clone(),
                children.iter().map(|c| rebuild(c, concepts, tax)).collect(),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> SemanticTaxonomy {
        SemanticTaxonomy::from_texts("a\tb\nb\tc\n", "x\ta\t2\nx\ta\t1\ny\tb\t4\n", "b\nc\n").unwrap()
    }

    #[test]
    fn chain_propagation_by_hand() {
        let tax = chain();
        // x: (2 + 1) + 0.1 at a, carried unchanged to b and c
        let p = tax.propagate("x");
        assert!((p["a"] - 3.1).abs() < 1e-12);
        assert!((p["b"] - 3.1).abs() < 1e-12);
        assert!((p["c"] - 3.1).abs() < 1e-12);
        assert_eq!(tax.prevalence("b"), 2);
        assert_eq!(tax.prevalence("c"), 2);
        let w = tax.weights("y");
        assert!((w["b"] - 4.1 / 2.0).abs() < 1e-12);
        // equal weights at b and c: deeper b wins
        assert_eq!(tax.assign_category("x"), "b");
    }

    #[test]
    fn join_points_sum() {
        let tax = SemanticTaxonomy::from_texts("s\tl\ns\tr\nl\ttop\nr\ttop\n", "w\ts\t1\n", "top\n").unwrap();
        assert!((tax.propagate("w")["top"] - 2.2).abs() < 1e-12);
    }

    #[test]
    fn fallbacks() {
        let tax = SemanticTaxonomy::from_texts("a\tb\n", "", "b\n").unwrap();
        assert_eq!(tax.assign_category("computer"), FALLBACK_CATEGORY);
        let tax = chain();
        assert_eq!(tax.assign_category("unknown-01"), FALLBACK_CATEGORY);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            SemanticTaxonomy::from_texts("a\tb\nb\ta\n", "", ""),
            Err(TaxonomyError::Cycle(_))
        ));
        assert!(matches!(
            SemanticTaxonomy::from_texts("a\tb\n", "", "zzz\n"),
            Err(TaxonomyError::UnknownSalient(_))
        ));
        assert!(matches!(
            SemanticTaxonomy::from_texts("a b c\n", "", ""),
            Err(TaxonomyError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            SemanticTaxonomy::from_texts("", "x\ta\tmany\n", ""),
            Err(TaxonomyError::Malformed { file: "senses", .. })
        ));
    }

    #[test]
    fn lemmas() {
        assert_eq!(lemma_of("fear-01"), "fear");
        assert_eq!(lemma_of("soldier"), "soldier");
        assert_eq!(lemma_of("-"), "-");
        assert_eq!(lemma_of("long-term"), "long-term");
    }

    #[test]
    fn categories_replace_only_concept_preterminals() {
        let tax = SemanticTaxonomy::from_texts("soldier.n\tperson\n", "soldier\tsoldier.n\t3\n", "person\n")
            .unwrap();
        let t: SbmtTree =
            "(X (ROOT (fear-01P fear-01) (ARG0P ARG0) (X (soldierP soldier))) (polarityP polarity) (Spolarity -))"
                .parse()
                .unwrap();
        let out = apply_categories(&t, &tax);
        assert_eq!(
            out.to_string(),
            "(X (ROOT (OTHER fear-01) (ARG0P ARG0) (X (person soldier))) (polarityP polarity) (Spolarity -))"
        );
        assert_eq!(out.leaves(), t.leaves());
    }
}
