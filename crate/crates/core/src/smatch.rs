//! Smatch: F-score over matched triples under the best variable mapping.
//!
//! A graph decomposes into instance triples `(var, concept)`, relation
//! triples `(role, var, var)`, attribute triples `(role, var, constant)` and
//! one `(TOP, root, root-concept)` triple. A mapping sends each test variable
//! to at most one gold variable and no two test variables to the same one.
//! The hill climber starts from a concept-matching mapping plus random
//! mappings and applies the best reassign or swap move until none improves.
//! The exact mode searches all mappings with branch and bound.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::amr::{AmrGraph, Target};

/// Largest smaller-side variable count accepted by the exact search.
pub const EXACT_VAR_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmatchError {
    #[error("exact matching needs one graph with at most {EXACT_VAR_LIMIT} variables, smaller has {0}")]
    TooLarge(usize),
    #[error("test and gold corpora differ in size: {test} vs {gold}")]
    LengthMismatch { test: usize, gold: usize },
}

/// Triple decomposition of one graph; variables are numbered by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSet {
    pub vars: Vec<String>,
    /// Concept of each variable.
    pub instances: Vec<String>,
    /// `(role, source, target)` between variables.
    pub relations: Vec<(String, usize, usize)>,
    /// `(role, variable, constant)` with quotes removed.
    pub attributes: Vec<(String, usize, String)>,
    pub root: usize,
}

impl TripleSet {
    /// Instances, relations and attributes, plus TOP when `top` is set.
    pub fn len(&self, top: bool) -> usize {
        self.instances.len() + self.relations.len() + self.attributes.len() + usize::from(top)
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|t| t.strip_suffix('"')).unwrap_or(s)
}

pub fn to_triples(g: &AmrGraph) -> TripleSet {
    let vars: Vec<String> = g.instances().map(|(v, _)| v.to_string()).collect();
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let instances = g.instances().map(|(_, c)| c.to_string()).collect();
    let mut relations = Vec::new();
    let mut attributes = Vec::new();
    for r in g.roles() {
        let p = index[r.parent.as_str()];
        match &r.target {
            Target::Var(v) => relations.push((r.label.clone(), p, index[v.as_str()])),
            Target::Const(c) => attributes.push((r.label.clone(), p, unquote(c).to_string())),
        }
    }
    TripleSet {
        root: index[g.root()],
        vars,
        instances,
        relations,
        attributes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmatchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub exact: bool,
    /// Include the TOP triple.
    pub top: bool,
}

impl Default for SmatchOptions {
    fn default() -> Self {
        SmatchOptions {
            restarts: 4,
            seed: 0,
            exact: false,
            top: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmatchResult {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub matched: usize,
    pub test_triples: usize,
    pub gold_triples: usize,
    /// Gold variable for each test variable.
    pub mapping: Vec<(String, Option<String>)>,
}

/// `(P, R, F)` from match and total counts; F is 0 when P + R is 0.
pub fn prf(matched: usize, test: usize, gold: usize) -> (f64, f64, f64) {
    let p = if test == 0 {
        0.0
    } else {
        matched as f64 / test as f64
    };
    let r = if gold == 0 {
        0.0
    } else {
        matched as f64 / gold as f64
    };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Precomputed pairwise structure for scoring mappings.
struct Problem<'a> {
    a: &'a TripleSet,
    b: &'a TripleSet,
    /// Triples matched when `i -> j`, counting instance, TOP and attributes.
    unary: Vec<Vec<usize>>,
    gold_rel_counts: HashMap<(&'a str, usize, usize), usize>,
}

impl<'a> Problem<'a> {
    fn new(a: &'a TripleSet, b: &'a TripleSet, top: bool) -> Self {
        let n = a.vars.len();
        let m = b.vars.len();
        let mut unary = vec![vec![0; m]; n];
        let mut attrs_b: HashMap<(&str, &str), Vec<usize>> = HashMap::new();
        for (role, v, c) in &b.attributes {
            attrs_b.entry((role, c)).or_default().push(*v);
        }
        let mut attrs_a: HashMap<(&str, &str, usize), usize> = HashMap::new();
        for (role, v, c) in &a.attributes {
            *attrs_a.entry((role, c, *v)).or_default() += 1;
        }
        for (i, row) in unary.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let same = a.instances[i] == b.instances[j];
                *cell = usize::from(same) + usize::from(top && same && i == a.root && j == b.root);
            }
        }
        for ((role, c, i), count_a) in attrs_a {
            if let Some(bs) = attrs_b.get(&(role, c)) {
                for (j, cell) in unary[i].iter_mut().enumerate() {
                    let count_b = bs.iter().filter(|&&v| v == j).count();
                    *cell += count_a.min(count_b);
                }
            }
        }
        let mut gold_rel_counts = HashMap::new();
        for (r, b1, b2) in &b.relations {
            *gold_rel_counts.entry((r.as_str(), *b1, *b2)).or_default() += 1;
        }
        Problem {
            a,
            b,
            unary,
            gold_rel_counts,
        }
    }

    fn score(&self, map: &[Option<usize>]) -> usize {
        let mut s = 0;
        for (i, m) in map.iter().enumerate() {
            if let Some(j) = m {
                s += self.unary[i][*j];
            }
        }
        let mut used: HashMap<(&str, usize, usize), usize> = HashMap::new();
        for (r, a1, a2) in &self.a.relations {
            if let (Some(b1), Some(b2)) = (map[*a1], map[*a2]) {
                let key = (r.as_str(), b1, b2);
                if let Some(&avail) = self.gold_rel_counts.get(&key) {
                    let u = used.entry(key).or_default();
                    if *u < avail {
                        *u += 1;
                        s += 1;
                    }
                }
            }
        }
        s
    }

    /// Upper bound on triples involving any of the variables `from..` of
    /// the test side, used by the exact search.
    fn remaining_bound(&self, from: usize) -> usize {
        let mut s = 0;
        for i in from..self.a.vars.len() {
            s += self.unary[i].iter().copied().max().unwrap_or(0);
        }
        s + self
            .a
            .relations
            .iter()
            .filter(|(_, a1, a2)| *a1 >= from || *a2 >= from)
            .count()
    }

    /// Relation triples `i -> j` could match: incident relations of the
    /// same role and direction on both sides.
    fn potential(&self, i: usize, j: usize) -> usize {
        let mut out: HashMap<(&str, bool), (usize, usize)> = HashMap::new();
        for (r, x, y) in &self.a.relations {
            for (end, outgoing) in [(*x, true), (*y, false)] {
                if end == i {
                    out.entry((r.as_str(), outgoing)).or_default().0 += 1;
                }
            }
        }
        for (r, x, y) in &self.b.relations {
            for (end, outgoing) in [(*x, true), (*y, false)] {
                if end == j {
                    out.entry((r.as_str(), outgoing)).or_default().1 += 1;
                }
            }
        }
        out.values().map(|(a, b)| a.min(b)).sum()
    }

    /// Greedy over all pairs by concept-level matches, ties broken by
    /// relation potential; pairs with neither are left unmapped.
    fn greedy(&self) -> Vec<Option<usize>> {
        let (n, m) = (self.a.vars.len(), self.b.vars.len());
        let mut pairs: Vec<(usize, usize, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let pot = self.potential(i, j);
                if self.unary[i][j] > 0 || pot > 0 {
                    pairs.push((self.unary[i][j], pot, i, j));
                }
            }
        }
        pairs.sort_by(|x, y| (y.0, y.1).cmp(&(x.0, x.1)).then((x.2, x.3).cmp(&(y.2, y.3))));
        let mut used = vec![false; m];
        let mut map = vec![None; n];
        for (_, _, i, j) in pairs {
            if map[i].is_none() && !used[j] {
                used[j] = true;
                map[i] = Some(j);
            }
        }
        map
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let mut gold: Vec<Option<usize>> = (0..self.b.vars.len()).map(Some).collect();
        gold.extend(std::iter::repeat_n(None, self.a.vars.len()));
        gold.shuffle(rng);
        let mut map: Vec<Option<usize>> = gold.into_iter().take(self.a.vars.len()).collect();
        // leave a few slots unmapped at random
        for m in map.iter_mut() {
            if m.is_some() && rng.gen_bool(0.1) {
                *m = None;
            }
        }
        map
    }

    fn climb(&self, mut map: Vec<Option<usize>>) -> (usize, Vec<Option<usize>>) {
        let n = map.len();
        let m = self.b.vars.len();
        let mut cur = self.score(&map);
        loop {
            let mut best: Option<(usize, Vec<Option<usize>>)> = None;
            let consider = |cand: Vec<Option<usize>>, best: &mut Option<(usize, Vec<Option<usize>>)>| {
                let s = self.score(&cand);
                if s > best.as_ref().map_or(cur, |b| b.0) {
                    *best = Some((s, cand));
                }
            };
            let mut taken = vec![false; m];
            for j in map.iter().flatten() {
                taken[*j] = true;
            }
            for i in 0..n {
                for j in (0..m).filter(|&j| !taken[j]).map(Some).chain([None]) {
                    if map[i] != j {
                        let mut c = map.clone();
                        c[i] = j;
                        consider(c, &mut best);
                    }
                }
                for k in i + 1..n {
                    if map[i] != map[k] {
                        let mut c = map.clone();
                        c.swap(i, k);
                        consider(c, &mut best);
                    }
                }
            }
            match best {
                Some((s, c)) => {
                    cur = s;
                    map = c;
                }
                None => return (cur, map),
            }
        }
    }

    fn exact(&self) -> (usize, Vec<Option<usize>>) {
        let n = self.a.vars.len();
        let mut best = (0usize, vec![None; n]);
        let mut map = vec![None; n];
        let mut used = vec![false; self.b.vars.len()];
        let bounds: Vec<usize> = (0..=n).map(|k| self.remaining_bound(k)).collect();
        self.search(0, &mut map, &mut used, &bounds, &mut best);
        best
    }

    fn search(
        &self,
        i: usize,
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        bounds: &[usize],
        best: &mut (usize, Vec<Option<usize>>),
    ) {
        let n = map.len();
        let partial = self.score(map);
        if i == n {
            if partial > best.0 {
                *best = (partial, map.clone());
            }
            return;
        }
        if partial + bounds[i] <= best.0 {
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                map[i] = Some(j);
                self.search(i + 1, map, used, bounds, best);
                map[i] = None;
                used[j] = false;
            }
        }
        self.search(i + 1, map, used, bounds, best);
    }
}

fn result(a: &TripleSet, b: &TripleSet, matched: usize, map: &[Option<usize>], top: bool) -> SmatchResult {
    let (precision, recall, f) = prf(matched, a.len(top), b.len(top));
    SmatchResult {
        precision,
        recall,
        f,
        matched,
        test_triples: a.len(top),
        gold_triples: b.len(top),
        mapping: a
            .vars
            .iter()
            .zip(map)
            .map(|(v, m)| (v.clone(), m.map(|j| b.vars[j].clone())))
            .collect(),
    }
}

/// Score `test` against `gold`.
pub fn smatch_score(
    test: &AmrGraph,
    gold: &AmrGraph,
    opts: &SmatchOptions,
) -> Result<SmatchResult, SmatchError> {
    let a = to_triples(test);
    let b = to_triples(gold);
    if opts.exact {
        let small = a.vars.len().min(b.vars.len());
        if small > EXACT_VAR_LIMIT {
            return Err(SmatchError::TooLarge(small));
        }
        // search over the smaller side, then invert the mapping
        if a.vars.len() <= b.vars.len() {
            let p = Problem::new(&a, &b, opts.top);
            let (m, map) = p.exact();
            return Ok(result(&a, &b, m, &map, opts.top));
        }
        let p = Problem::new(&b, &a, opts.top);
        let (m, inv) = p.exact();
        let mut map = vec![None; a.vars.len()];
        for (j, i) in inv.iter().enumerate() {
            if let Some(i) = i {
                map[*i] = Some(j);
            }
        }
        return Ok(result(&a, &b, m, &map, opts.top));
    }
    let p = Problem::new(&a, &b, opts.top);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut best, mut best_map) = p.climb(p.greedy());
    for _ in 1..opts.restarts.max(1) {
        let start = p.random(&mut rng);
        let (s, m) = p.climb(start);
        if s > best {
            best = s;
            best_map = m;
        }
    }
    Ok(result(&a, &b, best, &best_map, opts.top))
}

/// Corpus-level score from summed counts, plus per-pair results.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSmatch {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub per_pair: Vec<SmatchResult>,
}

/// Pairs are scored in parallel; pair `i` uses seed `opts.seed + i`.
pub fn corpus_smatch(
    test: &[AmrGraph],
    gold: &[AmrGraph],
    opts: &SmatchOptions,
) -> Result<CorpusSmatch, SmatchError> {
    use rayon::prelude::*;
    if test.len() != gold.len() {
        return Err(SmatchError::LengthMismatch {
            test: test.len(),
            gold: gold.len(),
        });
    }
    let per_pair: Vec<SmatchResult> = test
        .par_iter()
        .zip(gold)
        .enumerate()
        .map(|(i, (t, g))| {
            let o = SmatchOptions {
                seed: opts.seed.wrapping_add(i as u64),
                ..*opts
            };
            smatch_score(t, g, &o)
        })
        .collect::<Result<_, _>>()?;
    let matched = per_pair.iter().map(|r| r.matched).sum();
    let t = per_pair.iter().map(|r| r.test_triples).sum();
    let g = per_pair.iter().map(|r| r.gold_triples).sum();
    let (precision, recall, f) = prf(matched, t, g);
    Ok(CorpusSmatch {
        precision,
        recall,
        f,
        per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    const FIG1: &str = "(f / fear-01 :ARG0 (s / soldier) :ARG1 (d / die-01 :ARG1 s) :polarity -)";

    fn g(s: &str) -> AmrGraph {
        parse_penman(s).unwrap()
    }

    #[test]
    fn triple_counts() {
        let t = to_triples(&g(FIG1));
        assert_eq!(t.len(true), 8);
        assert_eq!(t.len(false), 7);
        assert_eq!(to_triples(&g("(a / amr-empty)")).len(true), 2);
    }

    #[test]
    fn identical_graphs() {
        for exact in [false, true] {
            let o = SmatchOptions {
                exact,
                ..Default::default()
            };
            let r = smatch_score(&g(FIG1), &g(FIG1), &o).unwrap();
            assert_eq!((r.precision, r.recall, r.f), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn missing_attribute() {
        let test = g("(f / fear-01 :ARG0 (s / soldier) :ARG1 (d / die-01 :ARG1 s))");
        let o = SmatchOptions {
            exact: true,
            ..Default::default()
        };
        let r = smatch_score(&test, &g(FIG1), &o).unwrap();
        let (p, rc) = (7.0 / 7.0, 7.0 / 8.0);
        assert_eq!(r.matched, 7);
        assert!((r.f - 2.0 * p * rc / (p + rc)).abs() < 1e-12);
    }

    #[test]
    fn renaming_and_swap() {
        let a = g("(x / want-01 :ARG0 (y / boy) :ARG1 (z / go-01 :ARG0 y))");
        let b = g("(q / want-01 :ARG1 (r / go-01 :ARG0 (p / girl)) :ARG0 p)");
        let ab = smatch_score(&a, &b, &SmatchOptions::default()).unwrap();
        let ba = smatch_score(&b, &a, &SmatchOptions::default()).unwrap();
        assert_eq!(ab.precision, ba.recall);
        // everything but boy/girl
        assert_eq!(ab.matched, 6);
    }

    #[test]
    fn quoted_constants_match_bare() {
        let a = g("(c / city :name (n / name :op1 \"York\"))");
        let b = g("(c / city :name (n / name :op1 York))");
        assert_eq!(smatch_score(&a, &b, &SmatchOptions::default()).unwrap().f, 1.0);
    }

    #[test]
    fn exact_refuses_large_graphs() {
        let big = (0..9).map(|i| format!(" :op{i} (v{i} / x)")).collect::<String>();
        let big = g(&format!("(r / and{big})"));
        let o = SmatchOptions {
            exact: true,
            ..Default::default()
        };
        assert_eq!(smatch_score(&big, &big, &o), Err(SmatchError::TooLarge(10)));
    }

    #[test]
    fn corpus_aggregates_counts() {
        let a = [g(FIG1), g("(a / b)")];
        let b = [g(FIG1), g("(a / c)")];
        let c = corpus_smatch(&a, &b, &SmatchOptions::default()).unwrap();
        assert_eq!(c.per_pair[1].matched, 0);
        assert!((c.f - 8.0 / 10.0).abs() < 1e-12);
        assert!(corpus_smatch(&a, &b[..1], &SmatchOptions::default()).is_err());
    }
}
