//! End-to-end experiment: transform, train, extract, tune, decode, score.
//!
//! A run is described by a [`PipelineConfig`], a versioned `key = value`
//! text file. Every stage writes its outputs under one run directory, and a
//! manifest records the configuration and each stage's status, so the
//! directory alone suffices to repeat the run. A failed stage is recorded
//! and every later stage is marked skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use crate::align::{read_alignment_file, AlignmentSet};
use crate::amr::{emit_penman, read_amr_corpus, AmrGraph};
use crate::decoder::{format_kbest, Decoder, DecoderConfig, WeightVector};
use crate::ghkm::{extract_grammar, RuleGrammar};
use crate::lm::{train_amr_lm, train_ngram, AmrTreeModel, NgramModel};
use crate::semcat::{apply_categories, SemanticTaxonomy};
use crate::smatch::{corpus_smatch, SmatchOptions};
use crate::transform::{disconnect, treeify, yield_amrese, RestructureMode, TransformConfig};
use crate::tree::SbmtTree;
use crate::tune::{coordinate_ascent, DevSet, Objective, TuneConfig, TuneModels};

pub const CONFIG_VERSION: u32 = 1;

/// Split on whitespace, then split off punctuation marks as tokens of their
/// own. A period or comma between two digits stays inside the number.
pub fn tokenize(line: &str) -> Vec<String> {
    const PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', '(', ')', '[', ']', '{', '}'];
    let mut out = Vec::new();
    for word in line.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut cur = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let numeric = (c == '.' || c == ',')
                && i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_ascii_digit()
                && chars[i + 1].is_ascii_digit();
            if PUNCT.contains(&c) && !numeric {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else {
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

/// Tokenize and lowercase.
pub fn preprocess(line: &str) -> Vec<String> {
    tokenize(line).into_iter().map(|t| t.to_lowercase()).collect()
}

/// File paths of one corpus split.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitPaths {
    pub amr: Option<PathBuf>,
    pub source: Option<PathBuf>,
    pub alignment: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: SplitPaths,
    /// Second training alignment set; the corpus is used once per set.
    pub train_alignment2: Option<PathBuf>,
    pub dev: SplitPaths,
    pub test: SplitPaths,
    pub restructure: Option<RestructureMode>,
    pub relabel: bool,
    pub reorder: bool,
    pub semcat: bool,
    pub taxonomy_hierarchy: Option<PathBuf>,
    pub taxonomy_senses: Option<PathBuf>,
    pub taxonomy_salient: Option<PathBuf>,
    pub ngram_order: usize,
    pub beam: Option<usize>,
    pub kbest: usize,
    pub rescore_k: usize,
    pub weights: Option<PathBuf>,
    pub tune: Option<Objective>,
    pub tune_passes: usize,
    /// Decode the training sentences too and score them.
    pub self_parse: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let d = DecoderConfig::default();
        PipelineConfig {
            train: SplitPaths::default(),
            train_alignment2: None,
            dev: SplitPaths::default(),
            test: SplitPaths::default(),
            restructure: Some(RestructureMode::Role),
            relabel: true,
            reorder: true,
            semcat: false,
            taxonomy_hierarchy: None,
            taxonomy_senses: None,
            taxonomy_salient: None,
            ngram_order: 5,
            beam: d.beam,
            kbest: d.kbest,
            rescore_k: d.rescore_k,
            weights: None,
            tune: None,
            tune_passes: 2,
            self_parse: false,
            seed: 0,
        }
    }
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or(String::new(), |p| p.display().to_string())
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => bail!("`{key}` must be true or false, got `{v}`"),
    }
}

impl PipelineConfig {
    /// Flat trees: no restructuring, relabeling or reordering.
    pub fn flat(mut self) -> Self {
        let t = TransformConfig::flat();
        self.restructure = t.restructure;
        self.relabel = t.relabel;
        self.reorder = t.reorder;
        self
    }

    pub fn transform(&self) -> TransformConfig {
        TransformConfig {
            restructure: self.restructure,
            relabel: self.relabel,
            reorder: self.reorder,
        }
    }

    pub fn decoder(&self) -> DecoderConfig {
        DecoderConfig {
            beam: self.beam,
            kbest: self.kbest,
            rescore_k: self.rescore_k,
            ..DecoderConfig::default()
        }
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("version", CONFIG_VERSION.to_string()),
            ("train_amr", opt_path(&self.train.amr)),
            ("train_source", opt_path(&self.train.source)),
            ("train_alignment", opt_path(&self.train.alignment)),
            ("train_alignment2", opt_path(&self.train_alignment2)),
            ("dev_amr", opt_path(&self.dev.amr)),
            ("dev_source", opt_path(&self.dev.source)),
            ("dev_alignment", opt_path(&self.dev.alignment)),
            ("test_amr", opt_path(&self.test.amr)),
            ("test_source", opt_path(&self.test.source)),
            ("test_alignment", opt_path(&self.test.alignment)),
            (
                "restructure",
                self.restructure.map_or("none".to_string(), |m| m.to_string()),
            ),
            ("relabel", self.relabel.to_string()),
            ("reorder", self.reorder.to_string()),
            ("semcat", self.semcat.to_string()),
            ("taxonomy_hierarchy", opt_path(&self.taxonomy_hierarchy)),
            ("taxonomy_senses", opt_path(&self.taxonomy_senses)),
            ("taxonomy_salient", opt_path(&self.taxonomy_salient)),
            ("ngram_order", self.ngram_order.to_string()),
            ("beam", self.beam.map_or("none".to_string(), |b| b.to_string())),
            ("kbest", self.kbest.to_string()),
            ("rescore_k", self.rescore_k.to_string()),
            ("weights", opt_path(&self.weights)),
            ("tune", self.tune.map_or("none".to_string(), |o| o.to_string())),
            ("tune_passes", self.tune_passes.to_string()),
            ("self_parse", self.self_parse.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// One `key = value` line per field in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# sbmt-amr pipeline configuration\n");
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Unknown keys and malformed values are errors; missing keys keep
    /// their defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        let mut version = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            let path = || (!v.is_empty()).then(|| PathBuf::from(v));
            let num = |v: &str| -> Result<usize> {
                v.parse()
                    .with_context(|| format!("config `{k}`: bad number `{v}`"))
            };
            match k {
                "version" => version = Some(v.parse::<u32>().context("bad version")?),
                "train_amr" => c.train.amr = path(),
                "train_source" => c.train.source = path(),
                "train_alignment" => c.train.alignment = path(),
                "train_alignment2" => c.train_alignment2 = path(),
                "dev_amr" => c.dev.amr = path(),
                "dev_source" => c.dev.source = path(),
                "dev_alignment" => c.dev.alignment = path(),
                "test_amr" => c.test.amr = path(),
                "test_source" => c.test.source = path(),
                "test_alignment" => c.test.alignment = path(),
                "restructure" => {
                    c.restructure = match v {
                        "none" => None,
                        m => Some(RestructureMode::from_str(m).map_err(|e| anyhow!("{e}"))?),
                    }
                }
                "relabel" => c.relabel = parse_bool(k, v)?,
                "reorder" => c.reorder = parse_bool(k, v)?,
                "semcat" => c.semcat = parse_bool(k, v)?,
                "taxonomy_hierarchy" => c.taxonomy_hierarchy = path(),
                "taxonomy_senses" => c.taxonomy_senses = path(),
                "taxonomy_salient" => c.taxonomy_salient = path(),
                "ngram_order" => c.ngram_order = num(v)?,
                "beam" => c.beam = if v == "none" { None } else { Some(num(v)?) },
                "kbest" => c.kbest = num(v)?,
                "rescore_k" => c.rescore_k = num(v)?,
                "weights" => c.weights = path(),
                "tune" => {
                    c.tune = match v {
                        "none" => None,
                        o => Some(o.parse().map_err(|e: String| anyhow!(e))?),
                    }
                }
                "tune_passes" => c.tune_passes = num(v)?,
                "self_parse" => c.self_parse = parse_bool(k, v)?,
                "seed" => c.seed = v.parse().with_context(|| format!("bad seed `{v}`"))?,
                _ => bail!("config line {}: unknown key `{k}`", i + 1),
            }
        }
        match version {
            Some(CONFIG_VERSION) => {}
            Some(v) => bail!("unsupported config version {v}"),
            None => bail!("config has no version"),
        }
        if c.ngram_order < 1 {
            bail!("ngram_order must be at least 1");
        }
        if c.semcat
            && (c.taxonomy_hierarchy.is_none() || c.taxonomy_senses.is_none() || c.taxonomy_salient.is_none())
        {
            bail!("semcat needs taxonomy_hierarchy, taxonomy_senses and taxonomy_salient");
        }
        Ok(c)
    }

    /// Every referenced file must exist, relative paths taken from `base`.
    pub fn validate(&self, base: &Path) -> Result<()> {
        let all = [
            &self.train.amr,
            &self.train.source,
            &self.train.alignment,
            &self.train_alignment2,
            &self.dev.amr,
            &self.dev.source,
            &self.dev.alignment,
            &self.test.amr,
            &self.test.source,
            &self.test.alignment,
            &self.taxonomy_hierarchy,
            &self.taxonomy_senses,
            &self.taxonomy_salient,
            &self.weights,
        ];
        for p in all.into_iter().flatten() {
            let full = base.join(p);
            if !full.is_file() {
                bail!("missing file {}", full.display());
            }
        }
        if self.train.amr.is_none() || self.train.source.is_none() {
            bail!("train_amr and train_source are required");
        }
        Ok(())
    }

    /// Rewrite relative paths as seen from `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let fix = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));
        let split = |s: &SplitPaths| SplitPaths {
            amr: fix(&s.amr),
            source: fix(&s.source),
            alignment: fix(&s.alignment),
        };
        PipelineConfig {
            train: split(&self.train),
            train_alignment2: fix(&self.train_alignment2),
            dev: split(&self.dev),
            test: split(&self.test),
            taxonomy_hierarchy: fix(&self.taxonomy_hierarchy),
            taxonomy_senses: fix(&self.taxonomy_senses),
            taxonomy_salient: fix(&self.taxonomy_salient),
            weights: fix(&self.weights),
            ..self.clone()
        }
    }
}

/// A loaded corpus split: preprocessed tokens, lowercased graphs, alignments.
#[derive(Debug, Clone, Default)]
pub struct Split {
    pub tokens: Vec<Vec<String>>,
    pub graphs: Vec<AmrGraph>,
    pub alignments: Vec<AlignmentSet>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

/// Load one split; alignment lines index the preprocessed tokens.
pub fn load_split(paths: &SplitPaths) -> Result<Split> {
    let (Some(amr), Some(src)) = (&paths.amr, &paths.source) else {
        return Ok(Split::default());
    };
    let graphs: Vec<AmrGraph> = read_amr_corpus(&read(amr)?)
        .with_context(|| format!("parsing {}", amr.display()))?
        .into_iter()
        .map(|e| e.graph.lowercased())
        .collect();
    let tokens: Vec<Vec<String>> = read(src)?.lines().map(preprocess).collect();
    if tokens.len() != graphs.len() {
        bail!(
            "{} has {} sentences but {} has {} graphs",
            src.display(),
            tokens.len(),
            amr.display(),
            graphs.len()
        );
    }
    let alignments = match &paths.alignment {
        Some(p) => read_alignments(p, &graphs, &tokens)?,
        None => vec![AlignmentSet::default(); graphs.len()],
    };
    Ok(Split {
        tokens,
        graphs,
        alignments,
    })
}

fn read_alignments(p: &Path, graphs: &[AmrGraph], tokens: &[Vec<String>]) -> Result<Vec<AlignmentSet>> {
    let al = read_alignment_file(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
    if al.len() != graphs.len() {
        bail!(
            "{} has {} lines, expected {}",
            p.display(),
            al.len(),
            graphs.len()
        );
    }
    for (i, a) in al.iter().enumerate() {
        a.validate(&graphs[i], tokens[i].len())
            .with_context(|| format!("{} line {}", p.display(), i + 1))?;
    }
    Ok(al)
}

/// Trees and yields of a split under one alignment set.
fn transform_split(
    s: &Split,
    alignments: &[AlignmentSet],
    cfg: &TransformConfig,
    tax: Option<&SemanticTaxonomy>,
) -> Result<Vec<(SbmtTree, crate::align::LeafAlignment)>> {
    s.graphs
        .iter()
        .zip(alignments)
        .enumerate()
        .map(|(i, (g, a))| {
            let t = treeify(g, Some(a), cfg).with_context(|| format!("sentence {}", i + 1))?;
            let tree = match tax {
                Some(tax) => apply_categories(&t.tree, tax),
                None => t.tree,
            };
            Ok((tree, t.alignment))
        })
        .collect()
}

/// Scores of one evaluated split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitScore {
    pub name: String,
    pub sentences: usize,
    /// `(P, R, F)`, absent for an empty split.
    pub prf: Option<(f64, f64, f64)>,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub scores: Vec<SplitScore>,
    pub stages: Vec<(String, String)>,
}

impl RunSummary {
    pub fn score(&self, split: &str) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.name == split)
            .and_then(|s| s.prf.map(|x| x.2))
    }

    pub fn succeeded(&self) -> bool {
        self.stages.iter().all(|(_, s)| s == "ok")
    }
}

/// Trained artefacts shared by the later stages.
pub struct Trained {
    pub grammar: RuleGrammar,
    pub ngram: NgramModel,
    pub ngram2: Option<NgramModel>,
    pub amr: AmrTreeModel,
    pub taxonomy: Option<SemanticTaxonomy>,
}

fn put(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    dir: &'a Path,
    stages: Vec<(String, String)>,
    failed: bool,
}

impl Run<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Option<T> {
        if self.failed {
            self.stages.push((name.to_string(), "skipped".to_string()));
            return None;
        }
        match f() {
            Ok(v) => {
                self.stages.push((name.to_string(), "ok".to_string()));
                Some(v)
            }
            Err(e) => {
                self.failed = true;
                let msg = format!("{e:#}").replace(['\t', '\n'], " ");
                self.stages.push((name.to_string(), format!("failed: {msg}")));
                None
            }
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        put(self.dir, name, text)
    }

    fn manifest(&self) -> Result<()> {
        let mut out = String::from("# sbmt-amr run manifest\n");
        for (k, v) in self.cfg.entries() {
            let _ = writeln!(out, "config\t{k}\t{v}");
        }
        for (stage, status) in &self.stages {
            let _ = writeln!(out, "stage\t{stage}\t{status}");
        }
        self.write("manifest.tsv", &out)
    }
}

/// Train all models from the training split.
pub fn train_models(cfg: &PipelineConfig, train: &Split) -> Result<(Trained, Vec<SbmtTree>)> {
    let taxonomy = if cfg.semcat {
        let (h, s, l) = (
            cfg.taxonomy_hierarchy.as_ref().expect("validated"),
            cfg.taxonomy_senses.as_ref().expect("validated"),
            cfg.taxonomy_salient.as_ref().expect("validated"),
        );
        let mut t = SemanticTaxonomy::from_files(h, s, l)?;
        let concepts: Vec<String> = train
            .graphs
            .iter()
            .flat_map(|g| g.instances().map(|(_, c)| c.to_string()).collect::<Vec<_>>())
            .collect();
        t.rebuild_prevalence(concepts.iter().map(String::as_str));
        Some(t)
    } else {
        None
    };
    let tcfg = cfg.transform();
    let primary = transform_split(train, &train.alignments, &tcfg, taxonomy.as_ref())?;
    let yields: Vec<Vec<String>> = primary.iter().map(|(t, _)| yield_amrese(t)).collect();
    let ngram = train_ngram(&yields, cfg.ngram_order)?;
    let mut tuples: Vec<(Vec<String>, SbmtTree, crate::align::LeafAlignment)> = train
        .tokens
        .iter()
        .zip(&primary)
        .map(|(s, (t, a))| (s.clone(), t.clone(), a.clone()))
        .collect();
    let mut ngram2 = None;
    if let Some(p) = &cfg.train_alignment2 {
        let second = read_alignments(p, &train.graphs, &train.tokens)?;
        let trees = transform_split(train, &second, &tcfg, taxonomy.as_ref())?;
        let y2: Vec<Vec<String>> = trees.iter().map(|(t, _)| yield_amrese(t)).collect();
        ngram2 = Some(train_ngram(&y2, cfg.ngram_order)?);
        tuples.extend(
            train
                .tokens
                .iter()
                .zip(trees)
                .map(|(s, (t, a))| (s.clone(), t, a)),
        );
    }
    let grammar = extract_grammar(&tuples)?;
    let trees: Vec<AmrGraph> = train.graphs.iter().map(disconnect).collect();
    let amr = train_amr_lm(&trees, taxonomy.as_ref())?;
    Ok((
        Trained {
            grammar,
            ngram,
            ngram2,
            amr,
            taxonomy,
        },
        primary.into_iter().map(|(t, _)| t).collect(),
    ))
}

fn decoder<'a>(cfg: &PipelineConfig, m: &'a Trained, w: &WeightVector) -> Decoder<'a> {
    Decoder::new(&m.grammar, Some(&m.ngram), Some(&m.amr), w.clone(), cfg.decoder())
        .with_second_ngram(m.ngram2.as_ref())
        .with_categories(m.taxonomy.is_some())
}

/// Run every stage, writing outputs under `dir`. Relative paths in `cfg`
/// are taken from `base`.
pub fn run_pipeline(cfg: &PipelineConfig, base: &Path, dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let resolved = cfg.resolved(base);
    let mut run = Run {
        cfg,
        dir,
        stages: Vec::new(),
        failed: false,
    };
    run.write("config.txt", &cfg.to_text())?;
    let data = run.stage("load", || {
        resolved.validate(Path::new(""))?;
        Ok((
            load_split(&resolved.train)?,
            load_split(&resolved.dev)?,
            load_split(&resolved.test)?,
        ))
    });
    let trained = data.as_ref().and_then(|(train, _, _)| {
        run.stage("train", || {
            let (m, trees) = train_models(&resolved, train)?;
            let tree_text: String = trees.iter().map(|t| format!("{t}\n")).collect();
            put(dir, "train.trees", &tree_text)?;
            let amrese: String = trees.iter().map(|t| yield_amrese(t).join(" ") + "\n").collect();
            put(dir, "train.amrese", &amrese)?;
            put(dir, "ngram.lm", &m.ngram.to_text())?;
            put(dir, "ngram.arpa", &m.ngram.to_arpa())?;
            if let Some(n2) = &m.ngram2 {
                put(dir, "ngram2.lm", &n2.to_text())?;
            }
            put(dir, "amr.lm", &m.amr.to_text())?;
            put(dir, "grammar.txt", &m.grammar.to_text())?;
            Ok(m)
        })
    });
    let weights = trained.as_ref().and_then(|m| {
        run.stage("tune", || {
            let init = match &resolved.weights {
                Some(p) => WeightVector::from_text(&read(p)?)?,
                None => WeightVector::default(),
            };
            let (_, dev, _) = data.as_ref().expect("loaded");
            let w = match resolved.tune {
                Some(objective) if !dev.is_empty() => {
                    let references =
                        transform_split(dev, &dev.alignments, &resolved.transform(), m.taxonomy.as_ref())?
                            .into_iter()
                            .map(|(t, _)| vec![yield_amrese(&t)])
                            .collect();
                    let devset = DevSet {
                        sources: dev.tokens.clone(),
                        gold: dev.graphs.clone(),
                        references,
                    };
                    let tcfg = TuneConfig {
                        objective,
                        max_passes: resolved.tune_passes,
                        seed: resolved.seed,
                        decoder: resolved.decoder(),
                        use_categories: m.taxonomy.is_some(),
                        ..TuneConfig::default()
                    };
                    let models = TuneModels {
                        grammar: &m.grammar,
                        ngram: Some(&m.ngram),
                        ngram2: m.ngram2.as_ref(),
                        amr: Some(&m.amr),
                    };
                    let report = coordinate_ascent(&devset, models, &init, &tcfg)?;
                    put(dir, "tune.tsv", &report.to_tsv())?;
                    report.weights
                }
                _ => init,
            };
            put(dir, "weights.txt", &w.to_text())?;
            Ok(w)
        })
    });
    let mut scores = Vec::new();
    if let (Some(m), Some(w), Some((train, dev, test))) = (&trained, &weights, &data) {
        run.stage("decode", || {
            let d = decoder(&resolved, m, w);
            let mut splits = vec![("dev", dev), ("test", test)];
            if resolved.self_parse {
                splits.insert(0, ("train", train));
            }
            let opts = SmatchOptions {
                seed: resolved.seed,
                ..SmatchOptions::default()
            };
            for (name, split) in splits {
                let results = d.decode_all(&split.tokens);
                let out: String = results
                    .iter()
                    .map(|r| emit_penman(&r.best().amr) + "\n\n")
                    .collect();
                put(dir, &format!("{name}.decoded.amr"), &out)?;
                let kb: String = results
                    .iter()
                    .enumerate()
                    .map(|(i, r)| format_kbest(i, &r.hypotheses))
                    .collect();
                put(dir, &format!("{name}.kbest"), &kb)?;
                let prf = if split.is_empty() {
                    None
                } else {
                    let test_graphs: Vec<AmrGraph> =
                        results.iter().map(|r| r.best().amr.lowercased()).collect();
                    let c = corpus_smatch(&test_graphs, &split.graphs, &opts)?;
                    Some((c.precision, c.recall, c.f))
                };
                scores.push(SplitScore {
                    name: name.to_string(),
                    sentences: split.len(),
                    prf,
                });
            }
            let mut text = String::from("split\tsentences\tprecision\trecall\tf\n");
            for s in &scores {
                match s.prf {
                    Some((p, r, f)) => {
                        let _ = writeln!(text, "{}\t{}\t{p:.4}\t{r:.4}\t{f:.4}", s.name, s.sentences);
                    }
                    None => {
                        let _ = writeln!(text, "{}\t{}\tn/a\tn/a\tn/a", s.name, s.sentences);
                    }
                }
            }
            put(dir, "scores.tsv", &text)?;
            Ok(())
        });
    } else {
        run.stage("decode", || Ok(()));
    }
    run.manifest()?;
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        scores,
        stages: run.stages,
    })
}
