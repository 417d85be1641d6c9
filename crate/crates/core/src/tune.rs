//! Weight tuning by coordinate ascent toward Smatch or BLEU over AMRese.
//!
//! Each pass visits every tuned feature and tries a fixed ladder of
//! multipliers on its weight, plus a sign flip. The best candidate replaces
//! the current weights only if it strictly improves the selected objective.
//! Both objectives are computed for every candidate so that their
//! correlation can be reported.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::amr::AmrGraph;
use crate::decoder::{Decoder, DecoderConfig, WeightVector, FEATURES};
use crate::ghkm::RuleGrammar;
use crate::lm::{AmrTreeModel, NgramModel};
use crate::smatch::{corpus_smatch, SmatchOptions};

/// Multipliers tried on a nonzero weight; the sign flip is tried as well.
pub const LADDER: [f64; 6] = [0.25, 0.5, 0.8, 1.25, 2.0, 4.0];
/// Values tried on a zero weight.
pub const ZERO_PROBES: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TuneError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("{candidates} candidates but {references} reference sets")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("sentence {0} has no reference")]
    NoReference(usize),
}

fn ngrams<S: AsRef<str>>(toks: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut out = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *out.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    out
}

/// Corpus BLEU-4 with clipped counts against one or more references per
/// sentence and a brevity penalty against the closest reference length
/// (the shorter on ties). Any zero n-gram precision gives 0.
pub fn bleu<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<Vec<S>>]) -> Result<f64, TuneError> {
    if candidates.is_empty() {
        return Err(TuneError::EmptyCorpus);
    }
    if candidates.len() != references.len() {
        return Err(TuneError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let mut matched = [0usize; MAX_ORDER];
    let mut total = [0usize; MAX_ORDER];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (i, (cand, refs)) in candidates.iter().zip(references).enumerate() {
        if refs.is_empty() {
            return Err(TuneError::NoReference(i));
        }
        c_len += cand.len();
        r_len += refs
            .iter()
            .map(Vec::len)
            .min_by_key(|&l| (l.abs_diff(cand.len()), l))
            .expect("non-empty");
        for n in 1..=MAX_ORDER {
            let c = ngrams(cand, n);
            let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
            for r in refs {
                for (g, k) in ngrams(r, n) {
                    let e = max_ref.entry(g).or_default();
                    *e = (*e).max(k);
                }
            }
            for (g, k) in &c {
                matched[n - 1] += (*k).min(max_ref.get(g).copied().unwrap_or(0));
                total[n - 1] += k;
            }
        }
    }
    if c_len == 0 || matched.contains(&0) {
        return Ok(0.0);
    }
    let log_p: f64 = (0..MAX_ORDER)
        .map(|n| (matched[n] as f64 / total[n] as f64).ln())
        .sum::<f64>()
        / MAX_ORDER as f64;
    let bp = if c_len > r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    Ok(bp * log_p.exp())
}

/// Pearson correlation; `None` when either series is constant or shorter
/// than two.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Smatch,
    Bleu,
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smatch" => Ok(Objective::Smatch),
            "bleu" | "bleu-amrese" => Ok(Objective::Bleu),
            _ => Err(format!("unknown objective `{s}` (expected smatch or bleu)")),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Smatch => "smatch",
            Objective::Bleu => "bleu",
        })
    }
}

/// Development data: source sentences, gold graphs and reference AMRese.
#[derive(Debug, Clone, Default)]
pub struct DevSet {
    pub sources: Vec<Vec<String>>,
    pub gold: Vec<AmrGraph>,
    pub references: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone)]
pub struct TuneConfig {
    pub objective: Objective,
    pub max_passes: usize,
    pub seed: u64,
    /// Features whose weights are tuned; the rest stay fixed.
    pub features: Vec<String>,
    pub decoder: DecoderConfig,
    pub use_categories: bool,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            objective: Objective::Smatch,
            max_passes: 3,
            seed: 0,
            features: FEATURES.iter().map(|f| f.to_string()).collect(),
            decoder: DecoderConfig::default(),
            use_categories: false,
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone)]
pub struct TuneStep {
    pub pass: usize,
    /// Empty for the initial evaluation.
    pub feature: String,
    pub value: f64,
    pub bleu: f64,
    pub smatch: f64,
    pub accepted: bool,
    /// Best selected objective so far.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct TuneReport {
    pub objective: Objective,
    pub steps: Vec<TuneStep>,
    pub weights: WeightVector,
    /// Pearson correlation of BLEU and Smatch over all evaluations.
    pub correlation: Option<f64>,
}

impl TuneReport {
    pub fn best(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.objective)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("step\tpass\tfeature\tvalue\tbleu\tsmatch\taccepted\tobjective\n");
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{:.6}",
                s.pass,
                if s.feature.is_empty() { "-" } else { &s.feature },
                s.value,
                s.bleu,
                s.smatch,
                u8::from(s.accepted),
                s.objective
            );
        }
        let _ = writeln!(
            out,
            "# correlation\t{}",
            self.correlation.map_or("n/a".to_string(), |c| format!("{c:.6}"))
        );
        out
    }
}

/// Models shared by every evaluation.
#[derive(Clone, Copy)]
pub struct TuneModels<'a> {
    pub grammar: &'a RuleGrammar,
    pub ngram: Option<&'a NgramModel>,
    pub ngram2: Option<&'a NgramModel>,
    pub amr: Option<&'a AmrTreeModel>,
}

/// `(BLEU over AMRese, corpus Smatch)` of the 1-best decodes.
pub fn evaluate(dev: &DevSet, models: TuneModels<'_>, w: &WeightVector, cfg: &TuneConfig) -> (f64, f64) {
    let d = Decoder::new(models.grammar, models.ngram, models.amr, w.clone(), cfg.decoder)
        .with_second_ngram(models.ngram2)
        .with_categories(cfg.use_categories);
    let results = d.decode_all(&dev.sources);
    let yields: Vec<Vec<String>> = results.iter().map(|r| r.best().amrese()).collect();
    let graphs: Vec<AmrGraph> = results.iter().map(|r| r.best().amr.lowercased()).collect();
    let gold: Vec<AmrGraph> = dev.gold.iter().map(AmrGraph::lowercased).collect();
    let b = bleu(&yields, &dev.references).unwrap_or(0.0);
    let opts = SmatchOptions {
        seed: cfg.seed,
        ..SmatchOptions::default()
    };
    let s = corpus_smatch(&graphs, &gold, &opts).map_or(0.0, |c| c.f);
    (b, s)
}

fn candidates(v: f64) -> Vec<f64> {
    if v == 0.0 {
        return ZERO_PROBES.to_vec();
    }
    let mut c: Vec<f64> = LADDER.iter().map(|m| v * m).collect();
    c.push(-v);
    c
}

pub fn coordinate_ascent(
    dev: &DevSet,
    models: TuneModels<'_>,
    init: &WeightVector,
    cfg: &TuneConfig,
) -> Result<TuneReport, TuneError> {
    if dev.sources.is_empty() {
        return Err(TuneError::EmptyCorpus);
    }
    let pick = |b: f64, s: f64| match cfg.objective {
        Objective::Smatch => s,
        Objective::Bleu => b,
    };
    let mut weights = init.clone();
    let (b0, s0) = evaluate(dev, models, &weights, cfg);
    let mut current = pick(b0, s0);
    let mut steps = vec![TuneStep {
        pass: 0,
        feature: String::new(),
        value: 0.0,
        bleu: b0,
        smatch: s0,
        accepted: true,
        objective: current,
    }];
    for pass in 1..=cfg.max_passes {
        let mut improved = false;
        for f in &cfg.features {
            let Ok(v) = weights.get(f) else { continue };
            let mut best: Option<(f64, f64)> = None;
            let mut logged = Vec::new();
            for c in candidates(v) {
                let mut w = weights.clone();
                if w.set(f, c).is_err() {
                    continue;
                }
                let (b, s) = evaluate(dev, models, &w, cfg);
                let o = pick(b, s);
                if o > best.map_or(current, |x| x.1) {
                    best = Some((c, o));
                }
                logged.push((c, b, s));
            }
            let chosen = best.map(|x| x.0);
            if let Some((c, o)) = best {
                weights.set(f, c).expect("tried above");
                current = o;
                improved = true;
            }
            for (c, b, s) in logged {
                steps.push(TuneStep {
                    pass,
                    feature: f.clone(),
                    value: c,
                    bleu: b,
                    smatch: s,
                    accepted: Some(c) == chosen,
                    objective: current,
                });
            }
        }
        if !improved {
            break;
        }
    }
    let bl: Vec<f64> = steps.iter().map(|s| s.bleu).collect();
    let sm: Vec<f64> = steps.iter().map(|s| s.smatch).collect();
    Ok(TuneReport {
        objective: cfg.objective,
        correlation: pearson(&bl, &sm),
        steps,
        weights,
    })
}
