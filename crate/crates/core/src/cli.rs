//! Command-line interface. Each subcommand wraps one library stage; `run`
//! drives the whole experiment from a configuration file.

use std::fs;
use std::io::{self, Read as _, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::align::{read_alignment_file, AlignmentSet};
use crate::amr::{emit_penman, read_amr_corpus, AmrGraph};
use crate::decoder::{format_kbest, Decoder, DecoderConfig, WeightVector};
use crate::ghkm::{extract_grammar, RuleGrammar};
use crate::lm::{train_amr_lm, train_ngram, AmrTreeModel, NgramModel};
use crate::pipeline::{preprocess, run_pipeline, PipelineConfig};
use crate::semcat::{apply_categories, SemanticTaxonomy};
use crate::smatch::{corpus_smatch, SmatchOptions};
use crate::transform::{disconnect, treeify, yield_amrese, RestructureMode, TransformConfig};
use crate::tune::{coordinate_ascent, DevSet, Objective, TuneConfig, TuneModels};

#[derive(Debug, Parser)]
#[command(name = "sbmt-amr", version, about = "String-to-tree AMR parsing")]
pub struct Cli {
    /// Seed for every randomized step; overrides a run configuration's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn AMR graphs into trees and print trees or AMRese strings.
    Treeify(TreeifyArgs),
    /// Semantic category lookups.
    #[command(subcommand)]
    Semcat(SemcatCommand),
    /// Train or apply language models.
    #[command(subcommand)]
    Lm(LmCommand),
    /// Extract a scored minimal-rule grammar.
    Extract(ExtractArgs),
    /// Parse sentences into AMR graphs.
    Decode(DecodeArgs),
    /// Score test graphs against gold graphs.
    Smatch(SmatchArgs),
    /// Tune feature weights by coordinate ascent.
    Tune(TuneArgs),
    /// Run the full experiment described by a configuration file.
    Run(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    /// Binarization labels: role, concept or none.
    #[arg(long, default_value = "role")]
    pub restructure: String,
    #[arg(long)]
    pub no_relabel: bool,
    #[arg(long)]
    pub no_reorder: bool,
}

impl TransformArgs {
    fn config(&self) -> Result<TransformConfig> {
        let restructure = match self.restructure.as_str() {
            "none" => None,
            m => Some(m.parse::<RestructureMode>().map_err(anyhow::Error::msg)?),
        };
        Ok(TransformConfig {
            restructure,
            relabel: !self.no_relabel,
            reorder: !self.no_reorder,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct TaxonomyArgs {
    /// Hypernym edges, `child<TAB>parent` per line.
    #[arg(long, requires_all = ["senses", "salient"])]
    pub hierarchy: Option<PathBuf>,
    /// Lemma senses, `lemma<TAB>synset...` per line.
    #[arg(long)]
    pub senses: Option<PathBuf>,
    /// Salient categories, one per line.
    #[arg(long)]
    pub salient: Option<PathBuf>,
}

impl TaxonomyArgs {
    fn load(&self, graphs: &[AmrGraph]) -> Result<Option<SemanticTaxonomy>> {
        let (Some(h), Some(s), Some(l)) = (&self.hierarchy, &self.senses, &self.salient) else {
            return Ok(None);
        };
        let mut t = SemanticTaxonomy::from_files(h, s, l)?;
        if !graphs.is_empty() {
            let concepts: Vec<String> = graphs
                .iter()
                .flat_map(|g| g.instances().map(|(_, c)| c.to_string()).collect::<Vec<_>>())
                .collect();
            t.rebuild_prevalence(concepts.iter().map(String::as_str));
        }
        Ok(Some(t))
    }
}

#[derive(Debug, Args)]
pub struct TreeifyArgs {
    #[arg(long)]
    pub amr: PathBuf,
    /// Alignments; required for reordering.
    #[arg(long)]
    pub align: Option<PathBuf>,
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Print AMRese strings instead of bracketed trees.
    #[arg(long)]
    pub amrese: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SemcatCommand {
    /// Print `lemma<TAB>category` for each lemma.
    Assign(SemcatArgs),
}

#[derive(Debug, Args)]
pub struct SemcatArgs {
    #[command(flatten)]
    pub taxonomy: TaxonomyArgs,
    /// Corpus whose concept counts set category prevalence.
    #[arg(long)]
    pub amr: Option<PathBuf>,
    /// Concepts or lemmas to categorize; standard input when absent.
    #[arg(long = "lemma")]
    pub lemmas: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum LmCommand {
    /// Train a Witten-Bell n-gram model on whitespace-separated lines.
    TrainNgram {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        order: usize,
        #[arg(long, short)]
        output: PathBuf,
        /// Also write the model in ARPA format.
        #[arg(long)]
        arpa: Option<PathBuf>,
    },
    /// Train the AMR tree model on a PENMAN corpus.
    TrainAmr {
        #[arg(long)]
        amr: PathBuf,
        #[command(flatten)]
        taxonomy: TaxonomyArgs,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Print per-line log probabilities and the corpus perplexity.
    Score {
        /// N-gram model; scores the lines of `--input`.
        #[arg(long, requires = "input")]
        ngram: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// AMR tree model; scores the graphs of `--amr`.
        #[arg(long = "amrlm", requires = "amr")]
        amr_model: Option<PathBuf>,
        #[arg(long)]
        amr: Option<PathBuf>,
        /// Score with semantic categories.
        #[arg(long)]
        categories: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub amr: PathBuf,
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub align: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub transform: TransformArgs,
    #[command(flatten)]
    pub taxonomy: TaxonomyArgs,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub grammar: PathBuf,
    #[arg(long)]
    pub ngram: Option<PathBuf>,
    /// AMR tree model.
    #[arg(long = "amrlm")]
    pub amr_model: Option<PathBuf>,
    /// Score with semantic categories.
    #[arg(long)]
    pub categories: bool,
    /// Per (span, label) beam; 0 disables pruning.
    #[arg(long, default_value_t = 100)]
    pub beam: usize,
    #[arg(long, default_value_t = 10)]
    pub kbest: usize,
    #[arg(long, default_value_t = 500)]
    pub rescore_k: usize,
}

struct Models {
    grammar: RuleGrammar,
    ngram: Option<NgramModel>,
    amr: Option<AmrTreeModel>,
}

impl ModelArgs {
    fn load(&self) -> Result<Models> {
        Ok(Models {
            grammar: RuleGrammar::from_text(&read(&self.grammar)?)?,
            ngram: self
                .ngram
                .as_ref()
                .map(|p| Ok::<_, anyhow::Error>(NgramModel::from_text(&read(p)?)?))
                .transpose()?,
            amr: self
                .amr_model
                .as_ref()
                .map(|p| Ok::<_, anyhow::Error>(AmrTreeModel::from_text(&read(p)?)?))
                .transpose()?,
        })
    }

    fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            beam: (self.beam > 0).then_some(self.beam),
            kbest: self.kbest,
            rescore_k: self.rescore_k,
            ..DecoderConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Sentences, one per line; standard input when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Write the k-best lists here.
    #[arg(long)]
    pub kbest_out: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmatchArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Exact search instead of hill climbing.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    /// Print one line per graph pair.
    #[arg(long)]
    pub per_sent: bool,
    /// Leave out the TOP triple.
    #[arg(long)]
    pub no_top: bool,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Dev corpus as `src,amr,align` paths.
    #[arg(long, value_parser = parse_corpus_triple)]
    pub dev: CorpusArgs,
    #[command(flatten)]
    pub models: ModelArgs,
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Starting weights.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// smatch or bleu.
    #[arg(long, default_value = "smatch")]
    pub objective: Objective,
    #[arg(long, default_value_t = 3)]
    pub max_passes: usize,
    /// Write every evaluation here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Run directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_corpus_triple(s: &str) -> Result<CorpusArgs, String> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [src, amr, align] => Ok(CorpusArgs {
            amr: amr.into(),
            src: src.into(),
            align: align.into(),
        }),
        _ => Err(format!("expected `src,amr,align`, got `{s}`")),
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(p) => write(p, text),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

fn read_graphs(p: &Path) -> Result<Vec<AmrGraph>> {
    Ok(read_amr_corpus(&read(p)?)
        .with_context(|| format!("parsing {}", p.display()))?
        .into_iter()
        .map(|e| e.graph)
        .collect())
}

type Corpus = (Vec<Vec<String>>, Vec<AmrGraph>, Vec<AlignmentSet>);

fn read_corpus(c: &CorpusArgs) -> Result<Corpus> {
    let graphs: Vec<AmrGraph> = read_graphs(&c.amr)?.iter().map(AmrGraph::lowercased).collect();
    let sources: Vec<Vec<String>> = read(&c.src)?.lines().map(preprocess).collect();
    let aligns = read_alignment_file(&read(&c.align)?)?;
    if sources.len() != graphs.len() || aligns.len() != graphs.len() {
        bail!(
            "corpus sizes differ: {} graphs, {} sentences, {} alignments",
            graphs.len(),
            sources.len(),
            aligns.len()
        );
    }
    for (i, a) in aligns.iter().enumerate() {
        a.validate(&graphs[i], sources[i].len())
            .with_context(|| format!("alignment line {}", i + 1))?;
    }
    Ok((sources, graphs, aligns))
}

pub fn run() -> Result<()> {
    execute(Cli::parse())
}

pub fn execute(cli: Cli) -> Result<()> {
    if cli.jobs > 0 {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Treeify(a) => {
            let graphs = read_graphs(&a.amr)?;
            let aligns = match &a.align {
                Some(p) => read_alignment_file(&read(p)?)?,
                None => vec![AlignmentSet::default(); graphs.len()],
            };
            if aligns.len() != graphs.len() {
                bail!("{} graphs but {} alignment lines", graphs.len(), aligns.len());
            }
            let cfg = a.transform.config()?;
            let mut out = String::new();
            for (i, (g, al)) in graphs.iter().zip(&aligns).enumerate() {
                let t = treeify(g, a.align.as_ref().map(|_| al), &cfg)
                    .with_context(|| format!("graph {}", i + 1))?;
                if a.amrese {
                    out.push_str(&yield_amrese(&t.tree).join(" "));
                } else {
                    out.push_str(&t.tree.to_string());
                }
                out.push('\n');
            }
            emit(&a.output, &out)
        }
        Command::Semcat(SemcatCommand::Assign(a)) => {
            let graphs = match &a.amr {
                Some(p) => read_graphs(p)?,
                None => Vec::new(),
            };
            let Some(tax) = a.taxonomy.load(&graphs)? else {
                bail!("semcat needs --hierarchy, --senses and --salient");
            };
            let mut concepts = a.lemmas.clone();
            if concepts.is_empty() {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s)?;
                concepts = s.split_whitespace().map(str::to_string).collect();
            }
            let out: String = concepts
                .iter()
                .map(|c| format!("{c}\t{}\n", tax.assign_category(c)))
                .collect();
            emit(&None, &out)
        }
        Command::Lm(cmd) => lm_command(cmd),
        Command::Extract(a) => {
            let (sources, graphs, aligns) = read_corpus(&a.corpus)?;
            let tax = a.taxonomy.load(&graphs)?;
            let cfg = a.transform.config()?;
            let mut tuples = Vec::with_capacity(graphs.len());
            for (i, ((s, g), al)) in sources.into_iter().zip(&graphs).zip(&aligns).enumerate() {
                let t = treeify(g, Some(al), &cfg).with_context(|| format!("graph {}", i + 1))?;
                let tree = match &tax {
                    Some(tax) => apply_categories(&t.tree, tax),
                    None => t.tree,
                };
                tuples.push((s, tree, t.alignment));
            }
            let grammar = extract_grammar(&tuples)?;
            write(&a.output, &grammar.to_text())?;
            eprintln!("{} rules from {} pairs", grammar.len(), tuples.len());
            Ok(())
        }
        Command::Decode(a) => {
            let m = a.models.load()?;
            let w = match &a.weights {
                Some(p) => WeightVector::from_text(&read(p)?)?,
                None => WeightVector::default(),
            };
            let text = match &a.input {
                Some(p) => read(p)?,
                None => {
                    let mut s = String::new();
                    io::stdin().read_to_string(&mut s)?;
                    s
                }
            };
            let sentences: Vec<Vec<String>> = text.lines().map(preprocess).collect();
            let d = Decoder::new(
                &m.grammar,
                m.ngram.as_ref(),
                m.amr.as_ref(),
                w,
                a.models.decoder_config(),
            )
            .with_categories(a.models.categories);
            let results = d.decode_all(&sentences);
            let out: String = results
                .iter()
                .map(|r| emit_penman(&r.best().amr) + "\n\n")
                .collect();
            if let Some(p) = &a.kbest_out {
                let kb: String = results
                    .iter()
                    .enumerate()
                    .map(|(i, r)| format_kbest(i, &r.hypotheses))
                    .collect();
                write(p, &kb)?;
            }
            emit(&a.output, &out)
        }
        Command::Smatch(a) => {
            let gold: Vec<AmrGraph> = read_graphs(&a.gold)?.iter().map(AmrGraph::lowercased).collect();
            let test: Vec<AmrGraph> = read_graphs(&a.test)?.iter().map(AmrGraph::lowercased).collect();
            let opts = SmatchOptions {
                restarts: a.restarts,
                seed,
                exact: a.exact,
                top: !a.no_top,
            };
            let c = corpus_smatch(&test, &gold, &opts)?;
            let mut out = String::new();
            if a.per_sent {
                for (i, r) in c.per_pair.iter().enumerate() {
                    out.push_str(&format!(
                        "{}\t{:.4}\t{:.4}\t{:.4}\n",
                        i + 1,
                        r.precision,
                        r.recall,
                        r.f
                    ));
                }
            }
            out.push_str(&format!(
                "Precision: {:.4}\nRecall: {:.4}\nF-score: {:.4}\n",
                c.precision, c.recall, c.f
            ));
            emit(&None, &out)
        }
        Command::Tune(a) => {
            let m = a.models.load()?;
            let (sources, gold, aligns) = read_corpus(&a.dev)?;
            let cfg = a.transform.config()?;
            let mut references = Vec::with_capacity(gold.len());
            for (g, al) in gold.iter().zip(&aligns) {
                references.push(vec![yield_amrese(&treeify(g, Some(al), &cfg)?.tree)]);
            }
            let dev = DevSet {
                sources,
                gold,
                references,
            };
            let init = match &a.init {
                Some(p) => WeightVector::from_text(&read(p)?)?,
                None => WeightVector::default(),
            };
            let tcfg = TuneConfig {
                objective: a.objective,
                max_passes: a.max_passes,
                seed,
                decoder: a.models.decoder_config(),
                use_categories: a.models.categories,
                ..TuneConfig::default()
            };
            let models = TuneModels {
                grammar: &m.grammar,
                ngram: m.ngram.as_ref(),
                ngram2: None,
                amr: m.amr.as_ref(),
            };
            let report = coordinate_ascent(&dev, models, &init, &tcfg)?;
            if let Some(p) = &a.trace {
                write(p, &report.to_tsv())?;
            }
            write(&a.output, &report.weights.to_text())?;
            let corr = report
                .correlation
                .map_or("n/a".to_string(), |c| format!("{c:.4}"));
            eprintln!(
                "best {} {:.4}, bleu/smatch correlation {corr}",
                a.objective,
                report.best()
            );
            Ok(())
        }
        Command::Run(a) => {
            let mut cfg = PipelineConfig::from_text(&read(&a.config)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let base = a.config.parent().unwrap_or(Path::new("."));
            let summary = run_pipeline(&cfg, base, &a.out)?;
            for (stage, status) in &summary.stages {
                eprintln!("{stage}\t{status}");
            }
            let text = read(&a.out.join("scores.tsv")).unwrap_or_default();
            emit(&None, &text)?;
            if !summary.succeeded() {
                bail!("run failed; see {}", a.out.join("manifest.tsv").display());
            }
            Ok(())
        }
    }
}

fn lm_command(cmd: LmCommand) -> Result<()> {
    match cmd {
        LmCommand::TrainNgram {
            input,
            order,
            output,
            arpa,
        } => {
            let corpus: Vec<Vec<String>> = read(&input)?
                .lines()
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect();
            let m = train_ngram(&corpus, order)?;
            write(&output, &m.to_text())?;
            if let Some(p) = arpa {
                write(&p, &m.to_arpa())?;
            }
            Ok(())
        }
        LmCommand::TrainAmr {
            amr,
            taxonomy,
            output,
        } => {
            let graphs: Vec<AmrGraph> = read_graphs(&amr)?.iter().map(AmrGraph::lowercased).collect();
            let tax = taxonomy.load(&graphs)?;
            let trees: Vec<AmrGraph> = graphs.iter().map(disconnect).collect();
            let m = train_amr_lm(&trees, tax.as_ref())?;
            write(&output, &m.to_text())
        }
        LmCommand::Score {
            ngram,
            input,
            amr_model,
            amr,
            categories,
        } => {
            let mut out = String::new();
            if let (Some(m), Some(input)) = (ngram, input) {
                let m = NgramModel::from_text(&read(&m)?)?;
                let corpus: Vec<Vec<String>> = read(&input)?
                    .lines()
                    .map(|l| l.split_whitespace().map(str::to_string).collect())
                    .collect();
                for s in &corpus {
                    out.push_str(&format!("{:.6}\n", m.score_sequence(s)));
                }
                out.push_str(&format!("perplexity\t{:.6}\n", m.perplexity(&corpus)));
            }
            if let (Some(m), Some(amr)) = (amr_model, amr) {
                let m = AmrTreeModel::from_text(&read(&m)?)?;
                for g in read_graphs(&amr)? {
                    let tree = disconnect(&g.lowercased());
                    out.push_str(&format!("{:.6}\n", m.score_amr(&tree, categories)?));
                }
            }
            if out.is_empty() {
                bail!("give --ngram with --input or --amrlm with --amr");
            }
            emit(&None, &out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "sbmt-amr", "smatch", "--gold", "g", "--test", "t", "--seed", "7", "--jobs", "2",
        ])
        .unwrap();
        assert_eq!((cli.seed, cli.jobs), (Some(7), 2));
        assert!(matches!(cli.command, Command::Smatch(_)));
        assert!(Cli::try_parse_from(["sbmt-amr", "lm", "score"]).is_ok());
        assert!(Cli::try_parse_from(["sbmt-amr", "frobnicate"]).is_err());
    }
}
