//! Language models over AMR.
//!
//! Two models share one Witten-Bell interpolation routine:
//!
//! * [`NgramModel`], an n-gram model over AMRese (the leaf yields of
//!   transformed trees). Lower orders drop context from the left.
//! * [`AmrTreeModel`], a generative model of tree-shaped AMRs. Each
//!   instance generates its concept given the role it fills and its parent's
//!   concept, then a set of role labels and exactly one `STOP`; backoff
//!   drops context from the right.
//!
//! All log probabilities are natural logs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::amr::{AmrGraph, Target};
use crate::semcat::{SemanticTaxonomy, FALLBACK_CATEGORY};
use crate::text::{escape_field, unescape_field};
use crate::tree::{PLACEHOLDER, ROOT_LABEL};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const STOP: &str = "STOP";

const UNK_ID: u32 = 0;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("model order must be at least 1")]
    BadOrder,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("graph is not a tree: instance `{0}` has several parents")]
    NotATree(String),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
}

// ---------------------------------------------------------------------------
// Symbols

#[derive(Debug, Clone, Default)]
struct Symbols {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Symbols {
    fn with_reserved(reserved: &[&str]) -> Self {
        let mut s = Symbols::default();
        for r in reserved {
            s.intern(r);
        }
        s
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    fn get(&self, name: &str) -> u32 {
        self.ids.get(name).copied().unwrap_or(UNK_ID)
    }

    fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

// ---------------------------------------------------------------------------
// Witten-Bell

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Backoff {
    /// n-gram style: keep the most recent context symbols.
    DropLeft,
    /// keep the leading context symbols.
    DropRight,
}

#[derive(Debug, Clone, Default)]
struct Counts {
    total: u64,
    events: HashMap<u32, u64>,
}

/// Interpolated Witten-Bell estimate of `P(event | context)`:
///
/// `P(e|h) = (c(h,e) + T(h) P(e|h')) / (c(h) + T(h))`
///
/// where `T(h)` is the number of distinct events seen after `h` and `h'` is
/// `h` with one symbol dropped. Below the empty context sits a uniform
/// distribution over the seen events plus one unknown event.
#[derive(Debug, Clone)]
struct WittenBell {
    context_len: usize,
    backoff: Backoff,
    levels: Vec<HashMap<Vec<u32>, Counts>>,
}

impl WittenBell {
    fn new(context_len: usize, backoff: Backoff) -> Self {
        WittenBell {
            context_len,
            backoff,
            levels: vec![HashMap::new(); context_len + 1],
        }
    }

    fn truncate<'a>(&self, ctx: &'a [u32], k: usize) -> &'a [u32] {
        match self.backoff {
            Backoff::DropLeft => &ctx[ctx.len() - k..],
            Backoff::DropRight => &ctx[..k],
        }
    }

    fn observe_n(&mut self, ctx: &[u32], event: u32, n: u64) {
        debug_assert_eq!(ctx.len(), self.context_len);
        for k in 0..=self.context_len {
            let key = self.truncate(ctx, k).to_vec();
            let c = self.levels[k].entry(key).or_default();
            c.total += n;
            *c.events.entry(event).or_insert(0) += n;
        }
    }

    fn observe(&mut self, ctx: &[u32], event: u32) {
        self.observe_n(ctx, event, 1);
    }

    /// Distinct events with nonzero count.
    fn event_types(&self) -> usize {
        self.levels[0].get(&Vec::new()).map_or(0, |c| c.events.len())
    }

    fn floor(&self) -> f64 {
        1.0 / (self.event_types() as f64 + 1.0)
    }

    /// `ctx` may be shorter than the full context; only the levels it
    /// covers are used.
    fn prob(&self, ctx: &[u32], event: u32) -> f64 {
        let mut p = self.floor();
        for k in 0..=ctx.len().min(self.context_len) {
            let h = self.truncate(ctx, k);
            if let Some(c) = self.levels[k].get(h) {
                let types = c.events.len() as f64;
                let seen = c.events.get(&event).copied().unwrap_or(0) as f64;
                p = (seen + types * p) / (c.total as f64 + types);
            }
        }
        p
    }

    /// Relative frequency at the full context, if the context was seen.
    fn ml(&self, ctx: &[u32], event: u32) -> Option<f64> {
        let c = self.levels[ctx.len()].get(ctx)?;
        Some(c.events.get(&event).copied().unwrap_or(0) as f64 / c.total as f64)
    }

    /// Largest `|Σ_e P(e|h) − 1|` over every stored context, summing over
    /// all seen events plus the unknown event.
    fn max_normalization_error(&self) -> f64 {
        let events: Vec<u32> = self.levels[0]
            .get(&Vec::new())
            .map(|c| c.events.keys().copied().collect())
            .unwrap_or_default();
        let mut worst: f64 = 0.0;
        for level in &self.levels {
            for ctx in level.keys() {
                let mut sum = self.prob(ctx, UNK_ID);
                for &e in &events {
                    sum += self.prob(ctx, e);
                }
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }

    fn contexts(&self) -> usize {
        self.levels.iter().map(HashMap::len).sum()
    }

    /// Full-context counts, sorted for stable output.
    fn write_counts(&self, syms: &Symbols, out: &mut String) {
        let mut lines: Vec<String> = Vec::new();
        for (ctx, c) in &self.levels[self.context_len] {
            let ctx_text: Vec<String> = ctx
                .iter()
                .map(|&id| escape_field(syms.name(id)).into_owned())
                .collect();
            for (&e, &n) in &c.events {
                lines.push(format!(
                    "{}\t{}\t{}",
                    ctx_text.join(" "),
                    escape_field(syms.name(e)),
                    n
                ));
            }
        }
        lines.sort();
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
}

fn parse_count_line(
    line_no: usize,
    line: &str,
    context_len: usize,
) -> Result<(Vec<String>, String, u64), LmError> {
    let err = |m: &str| LmError::Format {
        line: line_no,
        message: m.to_string(),
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(err("expected context<TAB>event<TAB>count"));
    }
    let ctx: Vec<String> = if fields[0].is_empty() {
        Vec::new()
    } else {
        fields[0].split(' ').map(unescape_field).collect()
    };
    if ctx.len() != context_len {
        return Err(err("wrong context length"));
    }
    let count: u64 = fields[2].parse().map_err(|_| err("bad count"))?;
    Ok((ctx, unescape_field(fields[1]), count))
}

/// Split a model file into `[section]` blocks, keeping line numbers.
type Sections<'a> = BTreeMap<String, Vec<(usize, &'a str)>>;

fn sections(text: &str) -> (Option<&str>, Sections<'_>) {
    let mut header = None;
    let mut out: BTreeMap<String, Vec<(usize, &str)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            header = Some(line);
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.to_string());
            out.entry(name.to_string()).or_default();
        } else if let Some(sec) = &current {
            out.entry(sec.clone()).or_default().push((i + 1, line));
        }
    }
    (header, out)
}

// ---------------------------------------------------------------------------
// N-gram model

const NGRAM_HEADER: &str = "sbmt-amr ngram v1";

/// Interpolated Witten-Bell n-gram model.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    syms: Symbols,
    table: WittenBell,
}

/// Train on token sequences; each is padded with `order − 1` `<s>` and one
/// `</s>`.
pub fn train_ngram(corpus: &[Vec<String>], order: usize) -> Result<NgramModel, LmError> {
    if order < 1 {
        return Err(LmError::BadOrder);
    }
    if corpus.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let mut m = NgramModel::empty(order);
    for sentence in corpus {
        let ids: Vec<u32> = sentence.iter().map(|w| m.syms.intern(w)).collect();
        let eos = m.syms.get(EOS);
        let bos = m.syms.get(BOS);
        let mut history = vec![bos; order - 1];
        for &w in ids.iter().chain(std::iter::once(&eos)) {
            m.table.observe(&history, w);
            if order > 1 {
                history.remove(0);
                history.push(w);
            }
        }
    }
    Ok(m)
}

impl NgramModel {
    fn empty(order: usize) -> Self {
        NgramModel {
            order,
            syms: Symbols::with_reserved(&[UNK, BOS, EOS]),
            table: WittenBell::new(order - 1, Backoff::DropLeft),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored contexts over all orders.
    pub fn context_count(&self) -> usize {
        self.table.contexts()
    }

    /// Symbol id of a token; unknown tokens map to `<unk>`.
    pub fn id(&self, token: &str) -> u32 {
        self.syms.get(token)
    }

    pub fn bos(&self) -> u32 {
        self.syms.get(BOS)
    }

    pub fn eos(&self) -> u32 {
        self.syms.get(EOS)
    }

    /// `ln P(w | history)`, using at most the last `order − 1` history ids.
    pub fn logprob_id(&self, history: &[u32], w: u32) -> f64 {
        let keep = history.len().min(self.order - 1);
        self.table.prob(&history[history.len() - keep..], w).ln()
    }

    pub fn logprob(&self, history: &[&str], w: &str) -> f64 {
        let ids: Vec<u32> = history.iter().map(|h| self.id(h)).collect();
        self.logprob_id(&ids, self.id(w))
    }

    /// Total log probability of a sentence including `</s>`.
    pub fn score_sequence<S: AsRef<str>>(&self, seq: &[S]) -> f64 {
        let mut history = vec![self.bos(); self.order - 1];
        let mut total = 0.0;
        for w in seq.iter().map(|w| self.id(w.as_ref())).chain([self.eos()]) {
            total += self.logprob_id(&history, w);
            if self.order > 1 {
                history.remove(0);
                history.push(w);
            }
        }
        total
    }

    /// `exp(−mean log prob)` over all predicted tokens including `</s>`.
    pub fn perplexity<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for s in corpus {
            total += self.score_sequence(s);
            n += s.len() + 1;
        }
        if n == 0 {
            return f64::NAN;
        }
        (-total / n as f64).exp()
    }

    /// Worst normalization error over all stored contexts.
    pub fn max_normalization_error(&self) -> f64 {
        self.table.max_normalization_error()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{NGRAM_HEADER}\norder\t{}\n[counts]\n", self.order);
        self.table.write_counts(&self.syms, &mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LmError> {
        let (header, secs) = sections(text);
        if header != Some(NGRAM_HEADER) {
            return Err(LmError::Format {
                line: 1,
                message: format!("expected header `{NGRAM_HEADER}`"),
            });
        }
        let order: usize = text
            .lines()
            .nth(1)
            .and_then(|l| l.strip_prefix("order\t"))
            .and_then(|o| o.parse().ok())
            .ok_or(LmError::Format {
                line: 2,
                message: "missing order".into(),
            })?;
        if order < 1 {
            return Err(LmError::BadOrder);
        }
        let mut m = NgramModel::empty(order);
        for (line_no, line) in secs.get("counts").into_iter().flatten() {
            let (ctx, event, n) = parse_count_line(*line_no, line, order - 1)?;
            let ctx: Vec<u32> = ctx.iter().map(|c| m.syms.intern(c)).collect();
            let e = m.syms.intern(&event);
            m.table.observe_n(&ctx, e, n);
        }
        Ok(m)
    }

    /// ARPA-style listing. Because the model is interpolated, seen n-grams
    /// carry their full interpolated probability and each context its
    /// backoff weight `T(h) / (c(h) + T(h))`, which reproduces the model
    /// exactly under standard backoff evaluation.
    pub fn to_arpa(&self) -> String {
        let mut sections = Vec::new();
        for n in 1..=self.order {
            let k = n - 1;
            let mut entries: Vec<(String, f64, Option<f64>)> = Vec::new();
            for (ctx, c) in &self.table.levels[k] {
                for &e in c.events.keys() {
                    let mut gram: Vec<u32> = ctx.clone();
                    gram.push(e);
                    let p = self.table.prob(ctx, e).log10();
                    let bow = (n < self.order)
                        .then(|| self.table.levels[n].get(&gram))
                        .flatten()
                        .map(|hc| {
                            let t = hc.events.len() as f64;
                            (t / (hc.total as f64 + t)).log10()
                        });
                    let text: Vec<&str> = gram.iter().map(|&i| self.syms.name(i)).collect();
                    entries.push((text.join(" "), p, bow));
                }
            }
            if n == 1 {
                entries.push((UNK.to_string(), self.table.prob(&[], UNK_ID).log10(), None));
            }
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            sections.push(entries);
        }
        let mut out = String::from("\\data\\\n");
        for (i, s) in sections.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", i + 1, s.len());
        }
        for (i, s) in sections.iter().enumerate() {
            let _ = write!(out, "\n\\{}-grams:\n", i + 1);
            for (gram, p, bow) in s {
                match bow {
                    Some(b) => {
                        let _ = writeln!(out, "{p:.6}\t{gram}\t{b:.6}");
                    }
                    None => {
                        let _ = writeln!(out, "{p:.6}\t{gram}");
                    }
                }
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }
}

// ---------------------------------------------------------------------------
// AMR tree model

const AMR_HEADER: &str = "sbmt-amr amrlm v1";

/// Which conditional distribution a factor comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// `P(s_c | l̂, s_ĉ, ĉ)`
    Category,
    /// `P(c | l̂, ĉ)`, or `P(c | s_c, l̂, s_ĉ, ĉ)` with categories
    Concept,
    /// `P(l | c)`, or `P(l | s_c, c)`
    Role,
    /// `P(STOP | c)`, or `P(STOP | s_c, c)`
    Stop,
}

/// One factor of an AMR score.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub kind: FactorKind,
    pub event: String,
    pub context: Vec<String>,
    pub logprob: f64,
}

#[derive(Debug, Clone)]
struct CategoryTables {
    category: WittenBell,
    concept: WittenBell,
    role: WittenBell,
    assigned: BTreeMap<String, String>,
}

/// Generative model of tree-shaped AMRs.
#[derive(Debug, Clone)]
pub struct AmrTreeModel {
    syms: Symbols,
    concept: WittenBell,
    role: WittenBell,
    categories: Option<CategoryTables>,
}

/// One instance or leaf filler as seen by the model.
struct Visit<'a> {
    concept: &'a str,
    parent_label: &'a str,
    parent_concept: &'a str,
    /// Role labels and child visits; `None` for constants and placeholders,
    /// which generate no role or STOP events.
    roles: Option<Vec<(&'a str, Visit<'a>)>>,
}

fn visits(g: &AmrGraph) -> Result<Visit<'_>, LmError> {
    if !g.is_tree() {
        let v = g
            .instances()
            .map(|(v, _)| v)
            .find(|v| g.parent_count(v) > 1)
            .unwrap_or_default();
        return Err(LmError::NotATree(v.to_string()));
    }
    fn go<'a>(g: &'a AmrGraph, var: &'a str, label: &'a str, parent: &'a str) -> Visit<'a> {
        let concept = g.concept(var).unwrap_or_default();
        if concept == PLACEHOLDER {
            return Visit {
                concept,
                parent_label: label,
                parent_concept: parent,
                roles: None,
            };
        }
        let roles = g
            .roles_of(var)
            .map(|r| {
                let child = match &r.target {
                    Target::Var(v) => go(g, v, &r.label, concept),
                    Target::Const(c) => Visit {
                        concept: c,
                        parent_label: &r.label,
                        parent_concept: concept,
                        roles: None,
                    },
                };
                (r.label.as_str(), child)
            })
            .collect();
        Visit {
            concept,
            parent_label: label,
            parent_concept: parent,
            roles: Some(roles),
        }
    }
    Ok(go(g, g.root(), ROOT_LABEL, ROOT_LABEL))
}

/// Collect the model's events from a corpus of tree-shaped graphs. With a
/// taxonomy, the category-conditioned tables are trained as well.
pub fn train_amr_lm(
    corpus: &[AmrGraph],
    taxonomy: Option<&SemanticTaxonomy>,
) -> Result<AmrTreeModel, LmError> {
    let mut m = AmrTreeModel::empty(taxonomy.is_some());
    for g in corpus {
        let v = visits(g)?;
        m.observe(&v, taxonomy);
    }
    Ok(m)
}

impl AmrTreeModel {
    fn empty(with_categories: bool) -> Self {
        AmrTreeModel {
            syms: Symbols::with_reserved(&[UNK, ROOT_LABEL, STOP]),
            concept: WittenBell::new(2, Backoff::DropRight),
            role: WittenBell::new(1, Backoff::DropRight),
            categories: with_categories.then(|| CategoryTables {
                category: WittenBell::new(3, Backoff::DropRight),
                concept: WittenBell::new(4, Backoff::DropRight),
                role: WittenBell::new(2, Backoff::DropRight),
                assigned: BTreeMap::new(),
            }),
        }
    }

    pub fn has_categories(&self) -> bool {
        self.categories.is_some()
    }

    fn category_of(&self, concept: &str) -> String {
        if concept == ROOT_LABEL {
            return ROOT_LABEL.to_string();
        }
        self.categories
            .as_ref()
            .and_then(|t| t.assigned.get(concept).cloned())
            .unwrap_or_else(|| FALLBACK_CATEGORY.to_string())
    }

    fn observe(&mut self, v: &Visit<'_>, tax: Option<&SemanticTaxonomy>) {
        let c = self.syms.intern(v.concept);
        let lh = self.syms.intern(v.parent_label);
        let ch = self.syms.intern(v.parent_concept);
        let stop = self.syms.get(STOP);
        self.concept.observe(&[lh, ch], c);
        let role_ids: Option<Vec<u32>> = v
            .roles
            .as_ref()
            .map(|rs| rs.iter().map(|(l, _)| self.syms.intern(l)).collect());
        if let Some(ids) = &role_ids {
            for &l in ids {
                self.role.observe(&[c], l);
            }
            self.role.observe(&[c], stop);
        }
        if let (Some(tax), Some(_)) = (tax, self.categories.as_ref()) {
            let sc_name = tax.assign_category(v.concept);
            let sh_name = if v.parent_concept == ROOT_LABEL {
                ROOT_LABEL.to_string()
            } else {
                tax.assign_category(v.parent_concept)
            };
            let sc = self.syms.intern(&sc_name);
            let sh = self.syms.intern(&sh_name);
            let t = self.categories.as_mut().expect("checked above");
            t.assigned.insert(v.concept.to_string(), sc_name);
            if v.parent_concept != ROOT_LABEL {
                t.assigned.insert(v.parent_concept.to_string(), sh_name);
            }
            t.category.observe(&[lh, sh, ch], sc);
            t.concept.observe(&[sc, lh, sh, ch], c);
            if let Some(ids) = &role_ids {
                for &l in ids {
                    t.role.observe(&[sc, c], l);
                }
                t.role.observe(&[sc, c], stop);
            }
        }
        if let Some(rs) = &v.roles {
            for (_, child) in rs {
                self.observe(child, tax);
            }
        }
    }

    /// `ln P_AMR(g | ROOT)`.
    pub fn score_amr(&self, g: &AmrGraph, use_categories: bool) -> Result<f64, LmError> {
        Ok(self.factors(g, use_categories)?.iter().map(|f| f.logprob).sum())
    }

    /// Every factor of the score in generation order.
    pub fn factors(&self, g: &AmrGraph, use_categories: bool) -> Result<Vec<Factor>, LmError> {
        let v = visits(g)?;
        let mut out = Vec::new();
        self.factor_walk(&v, use_categories && self.categories.is_some(), &mut out);
        Ok(out)
    }

    fn push(&self, out: &mut Vec<Factor>, kind: FactorKind, table: &WittenBell, ctx: &[&str], event: &str) {
        let ids: Vec<u32> = ctx.iter().map(|c| self.syms.get(c)).collect();
        let p = table.prob(&ids, self.syms.get(event));
        out.push(Factor {
            kind,
            event: event.to_string(),
            context: ctx.iter().map(|c| c.to_string()).collect(),
            logprob: p.ln(),
        });
    }

    fn factor_walk(&self, v: &Visit<'_>, cats: bool, out: &mut Vec<Factor>) {
        let (c, lh, ch) = (v.concept, v.parent_label, v.parent_concept);
        let (sc, sh) = (self.category_of(c), self.category_of(ch));
        if cats {
            let t = self.categories.as_ref().expect("cats implies tables");
            self.push(out, FactorKind::Category, &t.category, &[lh, &sh, ch], &sc);
            self.push(out, FactorKind::Concept, &t.concept, &[&sc, lh, &sh, ch], c);
        } else {
            self.push(out, FactorKind::Concept, &self.concept, &[lh, ch], c);
        }
        let Some(roles) = &v.roles else {
            return;
        };
        for (label, child) in roles {
            if cats {
                let t = self.categories.as_ref().expect("cats implies tables");
                self.push(out, FactorKind::Role, &t.role, &[&sc, c], label);
            } else {
                self.push(out, FactorKind::Role, &self.role, &[c], label);
            }
            self.factor_walk(child, cats, out);
        }
        if cats {
            let t = self.categories.as_ref().expect("cats implies tables");
            self.push(out, FactorKind::Stop, &t.role, &[&sc, c], STOP);
        } else {
            self.push(out, FactorKind::Stop, &self.role, &[c], STOP);
        }
    }

    /// Unsmoothed relative frequency `P(c | l̂, ĉ)`.
    pub fn ml_concept(&self, concept: &str, label: &str, parent: &str) -> Option<f64> {
        self.concept.ml(
            &[self.syms.get(label), self.syms.get(parent)],
            self.syms.get(concept),
        )
    }

    /// Unsmoothed relative frequency `P(l | c)`; pass [`STOP`] for the stop event.
    pub fn ml_role(&self, label: &str, concept: &str) -> Option<f64> {
        self.role.ml(&[self.syms.get(concept)], self.syms.get(label))
    }

    /// Interpolated `P(c | l̂, ĉ)`.
    pub fn p_concept(&self, concept: &str, label: &str, parent: &str) -> f64 {
        self.concept.prob(
            &[self.syms.get(label), self.syms.get(parent)],
            self.syms.get(concept),
        )
    }

    /// Interpolated `P(l | c)`.
    pub fn p_role(&self, label: &str, concept: &str) -> f64 {
        self.role.prob(&[self.syms.get(concept)], self.syms.get(label))
    }

    /// Role labels seen in training (excluding STOP).
    pub fn role_labels(&self) -> Vec<String> {
        let stop = self.syms.get(STOP);
        let mut v: Vec<String> = self.role.levels[0]
            .get(&Vec::new())
            .map(|c| {
                c.events
                    .keys()
                    .filter(|&&e| e != stop)
                    .map(|&e| self.syms.name(e).to_string())
                    .collect()
            })
            .unwrap_or_default();
        v.sort();
        v
    }

    /// Concepts seen in training.
    pub fn concepts(&self) -> Vec<String> {
        let mut v: Vec<String> = self.concept.levels[0]
            .get(&Vec::new())
            .map(|c| c.events.keys().map(|&e| self.syms.name(e).to_string()).collect())
            .unwrap_or_default();
        v.sort();
        v
    }

    /// Worst normalization error over every context of every table.
    pub fn max_normalization_error(&self) -> f64 {
        let mut worst = self
            .concept
            .max_normalization_error()
            .max(self.role.max_normalization_error());
        if let Some(t) = &self.categories {
            worst = worst
                .max(t.category.max_normalization_error())
                .max(t.concept.max_normalization_error())
                .max(t.role.max_normalization_error());
        }
        worst
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{AMR_HEADER}\n[concept]\n");
        self.concept.write_counts(&self.syms, &mut out);
        out.push_str("[role]\n");
        self.role.write_counts(&self.syms, &mut out);
        if let Some(t) = &self.categories {
            out.push_str("[category]\n");
            t.category.write_counts(&self.syms, &mut out);
            out.push_str("[category-concept]\n");
            t.concept.write_counts(&self.syms, &mut out);
            out.push_str("[category-role]\n");
            t.role.write_counts(&self.syms, &mut out);
            out.push_str("[assigned]\n");
            for (c, s) in &t.assigned {
                let _ = writeln!(out, "{}\t{}", escape_field(c), escape_field(s));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LmError> {
        let (header, secs) = sections(text);
        if header != Some(AMR_HEADER) {
            return Err(LmError::Format {
                line: 1,
                message: format!("expected header `{AMR_HEADER}`"),
            });
        }
        let mut m = AmrTreeModel::empty(secs.contains_key("category"));
        let load = |name: &str,
                    m: &mut AmrTreeModel,
                    pick: fn(&mut AmrTreeModel) -> &mut WittenBell|
         -> Result<(), LmError> {
            let len = pick(m).context_len;
            for (line_no, line) in secs.get(name).into_iter().flatten() {
                let (ctx, event, n) = parse_count_line(*line_no, line, len)?;
                let ctx: Vec<u32> = ctx.iter().map(|c| m.syms.intern(c)).collect();
                let e = m.syms.intern(&event);
                pick(m).observe_n(&ctx, e, n);
            }
            Ok(())
        };
        load("concept", &mut m, |m| &mut m.concept)?;
        load("role", &mut m, |m| &mut m.role)?;
        if m.categories.is_some() {
            load("category", &mut m, |m| {
                &mut m.categories.as_mut().unwrap().category
            })?;
            load("category-concept", &mut m, |m| {
                &mut m.categories.as_mut().unwrap().concept
            })?;
            load("category-role", &mut m, |m| {
                &mut m.categories.as_mut().unwrap().role
            })?;
            for (line_no, line) in secs.get("assigned").into_iter().flatten() {
                let (c, s) = line.split_once('\t').ok_or(LmError::Format {
                    line: *line_no,
                    message: "expected concept<TAB>category".into(),
                })?;
                if let Some(t) = m.categories.as_mut() {
                    t.assigned.insert(unescape_field(c), unescape_field(s));
                }
            }
        }
        Ok(m)
    }
}
