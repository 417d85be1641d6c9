//! Property tests over randomly generated graphs, tuples and corpora.
//! Generators are seeded from a proptest-chosen `u64`, so a failing case
//! reports the seed that reproduces it.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbmt_amr::amr::{emit_penman, parse_penman, AmrGraph, Role, Target};
use sbmt_amr::decoder::{Decoder, DecoderConfig, WeightVector};
use sbmt_amr::ghkm::{extract_grammar, RuleGrammar};
use sbmt_amr::lm::{train_amr_lm, train_ngram, NgramModel};
use sbmt_amr::pipeline::PipelineConfig;
use sbmt_amr::semcat::{apply_categories, SemanticTaxonomy};
use sbmt_amr::smatch::{smatch_score, SmatchOptions};
use sbmt_amr::synth::{random_amr, random_tuple, toy_corpus, GraphParams};
use sbmt_amr::transform::{
    disconnect, push_labels, relabel_strings, restructure, to_amr, treeify, yield_amrese, RestructureMode,
    TransformConfig,
};
use sbmt_amr::tune::{bleu, coordinate_ascent, DevSet, Objective, TuneConfig, TuneModels};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small() -> GraphParams {
    GraphParams {
        max_instances: 5,
        ..GraphParams::default()
    }
}

/// Same graph with variables renamed through a random bijection.
fn renamed(g: &AmrGraph, r: &mut ChaCha8Rng) -> AmrGraph {
    let mut fresh: Vec<String> = (0..g.instance_count()).map(|i| format!("z{i}")).collect();
    fresh.shuffle(r);
    let map: std::collections::HashMap<&str, String> = g.instances().map(|(v, _)| v).zip(fresh).collect();
    let roles = g
        .roles()
        .iter()
        .map(|role| {
            let target = match &role.target {
                Target::Var(v) => Target::Var(map[v.as_str()].clone()),
                c => c.clone(),
            };
            Role::new(map[role.parent.as_str()].clone(), role.label.clone(), target)
        })
        .collect();
    let instances = g.instances().map(|(v, c)| (map[v].clone(), c.to_string()));
    AmrGraph::new(map[g.root()].clone(), instances, roles).unwrap()
}

/// Same graph with its role list shuffled.
fn permuted(g: &AmrGraph, r: &mut ChaCha8Rng) -> AmrGraph {
    let mut roles = g.roles().to_vec();
    roles.shuffle(r);
    let instances = g.instances().map(|(v, c)| (v.to_string(), c.to_string()));
    AmrGraph::new(g.root(), instances, roles).unwrap()
}

fn toy_models(
    seed: u64,
    n: usize,
) -> (
    Vec<Vec<String>>,
    RuleGrammar,
    NgramModel,
    sbmt_amr::lm::AmrTreeModel,
) {
    let pairs = toy_corpus(&mut rng(seed), n);
    let cfg = TransformConfig::default();
    let tuples: Vec<_> = pairs
        .iter()
        .map(|p| {
            let t = treeify(&p.graph, Some(&p.alignment), &cfg).unwrap();
            (p.tokens.clone(), t.tree, t.alignment)
        })
        .collect();
    let grammar = extract_grammar(&tuples).unwrap();
    let yields: Vec<Vec<String>> = tuples.iter().map(|t| yield_amrese(&t.1)).collect();
    let ngram = train_ngram(&yields, 3).unwrap();
    let trees: Vec<AmrGraph> = pairs.iter().map(|p| disconnect(&p.graph)).collect();
    let amr = train_amr_lm(&trees, None).unwrap();
    (pairs.into_iter().map(|p| p.tokens).collect(), grammar, ngram, amr)
}

const TAXONOMY: (&str, &str, &str) = (
    "boy.n.01\tmale\nmale\tperson\ngirl.n.01\tfemale\nfemale\tperson\nperson\torganism\n\
     city.n.01\tregion\nregion\tlocation\n",
    "boy\tn.01\t5\ngirl\tn.01\t4\ncity\tn.01\t7\n",
    "person\nlocation\n",
);

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penman_emit_parse_is_identity_up_to_renaming(seed in any::<u64>()) {
        let g = random_amr(&mut rng(seed), &GraphParams::default());
        let back = parse_penman(&emit_penman(&g)).unwrap();
        prop_assert_eq!(back.canonical_key(), g.canonical_key());
    }

    #[test]
    fn transforms_invert_exactly_without_reordering(seed in any::<u64>(), role_mode in any::<bool>()) {
        let (_, g, a) = random_tuple(&mut rng(seed), &GraphParams::default());
        let cfg = TransformConfig {
            reorder: false,
            restructure: Some(if role_mode { RestructureMode::Role } else { RestructureMode::Concept }),
            ..TransformConfig::default()
        };
        let t = treeify(&g, Some(&a), &cfg).unwrap();
        prop_assert_eq!(to_amr(&t.tree).unwrap().canonical_key(), disconnect(&g).canonical_key());
    }

    #[test]
    fn transforms_invert_up_to_role_order(seed in any::<u64>()) {
        let (_, g, a) = random_tuple(&mut rng(seed), &GraphParams::default());
        let t = treeify(&g, Some(&a), &TransformConfig::default()).unwrap();
        prop_assert_eq!(to_amr(&t.tree).unwrap().unordered_key(), disconnect(&g).unordered_key());
    }

    #[test]
    fn reordering_never_adds_crossings(seed in any::<u64>()) {
        let (_, g, a) = random_tuple(&mut rng(seed), &GraphParams::default());
        let t = treeify(&g, Some(&a), &TransformConfig::default()).unwrap();
        prop_assert!(t.crossings.1 <= t.crossings.0);
    }

    #[test]
    fn restructure_and_relabel_keep_the_yield(seed in any::<u64>()) {
        let g = disconnect(&random_amr(&mut rng(seed), &GraphParams::default()));
        let t = push_labels(&g).unwrap();
        for mode in [RestructureMode::Concept, RestructureMode::Role] {
            let r = restructure(&t, mode).unwrap();
            prop_assert!(r.max_arity() <= 3);
            prop_assert_eq!(r.leaves(), t.leaves());
            let relabeled = relabel_strings(&r);
            prop_assert_eq!(relabeled.leaves(), t.leaves());
        }
    }

    #[test]
    fn categories_touch_only_preterminal_labels(seed in any::<u64>()) {
        let tax = SemanticTaxonomy::from_texts(TAXONOMY.0, TAXONOMY.1, TAXONOMY.2).unwrap();
        let g = disconnect(&random_amr(&mut rng(seed), &GraphParams::default()));
        let t = treeify(&g, None, &TransformConfig::default()).unwrap().tree;
        let c = apply_categories(&t, &tax);
        prop_assert_eq!(c.leaves(), t.leaves());
        prop_assert_eq!(c.node_count(), t.node_count());
    }

    #[test]
    fn amr_score_ignores_role_order_and_variable_names(seed in any::<u64>()) {
        let mut r = rng(seed);
        let corpus: Vec<AmrGraph> = (0..6).map(|_| disconnect(&random_amr(&mut r, &GraphParams::default()))).collect();
        let model = train_amr_lm(&corpus, None).unwrap();
        let g = disconnect(&random_amr(&mut r, &GraphParams::default()));
        let base = model.score_amr(&g, false).unwrap();
        let p = model.score_amr(&permuted(&g, &mut r), false).unwrap();
        let n = model.score_amr(&renamed(&g, &mut r), false).unwrap();
        prop_assert!((base - p).abs() < 1e-9, "{} vs {}", base, p);
        prop_assert!((base - n).abs() < 1e-9, "{} vs {}", base, n);
    }

    #[test]
    fn smatch_is_reflexive_and_symmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_amr(&mut r, &small());
        let b = random_amr(&mut r, &small());
        let exact = SmatchOptions { exact: true, ..SmatchOptions::default() };
        prop_assert_eq!(smatch_score(&a, &a, &exact).unwrap().f, 1.0);
        prop_assert_eq!(smatch_score(&a, &renamed(&a, &mut r), &exact).unwrap().f, 1.0);
        let ab = smatch_score(&a, &b, &exact).unwrap();
        let ba = smatch_score(&b, &a, &exact).unwrap();
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
        prop_assert!((ab.recall - ba.precision).abs() < 1e-12);
    }

    #[test]
    fn smatch_ignores_variable_names(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_amr(&mut r, &small());
        let b = random_amr(&mut r, &small());
        let exact = SmatchOptions { exact: true, ..SmatchOptions::default() };
        let f = smatch_score(&a, &b, &exact).unwrap().f;
        prop_assert_eq!(smatch_score(&renamed(&a, &mut r), &renamed(&b, &mut r), &exact).unwrap().f, f);
    }

    #[test]
    fn hill_climbing_never_beats_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_amr(&mut r, &small());
        let b = random_amr(&mut r, &small());
        let hill = smatch_score(&a, &b, &SmatchOptions { seed, ..SmatchOptions::default() }).unwrap();
        let exact = smatch_score(&a, &b, &SmatchOptions { exact: true, ..SmatchOptions::default() }).unwrap();
        prop_assert!(hill.f <= exact.f + 1e-12);
    }

    #[test]
    fn bleu_ignores_sentence_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let vocab = ["a", "b", "c", "d", "e"];
        let sent = |r: &mut ChaCha8Rng| -> Vec<String> {
            (0..r.gen_range(1..8)).map(|_| vocab.choose(r).unwrap().to_string()).collect()
        };
        let n = r.gen_range(1..6);
        let mut pairs: Vec<(Vec<String>, Vec<Vec<String>>)> =
            (0..n).map(|_| (sent(&mut r), vec![sent(&mut r), sent(&mut r)])).collect();
        let (c, refs): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let before = bleu(&c, &refs).unwrap();
        pairs.shuffle(&mut r);
        let (c, refs): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        prop_assert!((bleu(&c, &refs).unwrap() - before).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extraction_is_deterministic_and_serializable(seed in any::<u64>()) {
        let (_, a, _, _) = toy_models(seed, 6);
        let (_, b, _, _) = toy_models(seed, 6);
        prop_assert_eq!(a.to_text(), b.to_text());
        prop_assert_eq!(RuleGrammar::from_text(&a.to_text()).unwrap().to_text(), a.to_text());
    }

    #[test]
    fn ngram_text_round_trip(seed in any::<u64>()) {
        let (_, _, m, _) = toy_models(seed, 4);
        let back = NgramModel::from_text(&m.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), m.to_text());
    }

    #[test]
    fn kbest_is_sorted_and_duplicate_free(seed in any::<u64>()) {
        let (sources, grammar, ngram, amr) = toy_models(seed, 8);
        let d = Decoder::new(&grammar, Some(&ngram), Some(&amr), WeightVector::default(), DecoderConfig::default());
        let res = d.decode(&sources[0]);
        prop_assert!(res.hypotheses.windows(2).all(|w| w[0].score >= w[1].score));
        let mut keys: Vec<String> = res
            .hypotheses
            .iter()
            .map(|h| format!("{:?} {}", h.derivation.source_yield(&grammar), h.tree))
            .collect();
        let n = keys.len();
        keys.sort();
        keys.dedup();
        prop_assert_eq!(keys.len(), n);
    }

    #[test]
    fn wider_beam_never_lowers_the_best_score(seed in any::<u64>()) {
        let (sources, grammar, ngram, amr) = toy_models(seed, 8);
        let mut prev = f64::NEG_INFINITY;
        for beam in [1, 2, 5, 100] {
            let cfg = DecoderConfig { beam: Some(beam), ..DecoderConfig::default() };
            let d = Decoder::new(&grammar, Some(&ngram), Some(&amr), WeightVector::default(), cfg);
            let best = d.decode(&sources[0]).best().score;
            prop_assert!(best >= prev - 1e-9, "beam {}: {} < {}", beam, best, prev);
            prev = best;
        }
    }

    #[test]
    fn tuning_is_deterministic_and_monotone(seed in any::<u64>()) {
        let pairs = toy_corpus(&mut rng(seed), 6);
        let (sources, grammar, ngram, amr) = toy_models(seed, 6);
        let cfg = TransformConfig::default();
        let dev = DevSet {
            sources,
            gold: pairs.iter().map(|p| p.graph.clone()).collect(),
            references: pairs
                .iter()
                .map(|p| vec![yield_amrese(&treeify(&p.graph, Some(&p.alignment), &cfg).unwrap().tree)])
                .collect(),
        };
        let models = TuneModels { grammar: &grammar, ngram: Some(&ngram), ngram2: None, amr: Some(&amr) };
        let tcfg = TuneConfig { objective: Objective::Bleu, max_passes: 1, seed, ..TuneConfig::default() };
        let a = coordinate_ascent(&dev, models, &WeightVector::zeros(), &tcfg).unwrap();
        let b = coordinate_ascent(&dev, models, &WeightVector::zeros(), &tcfg).unwrap();
        prop_assert_eq!(a.to_tsv(), b.to_tsv());
        prop_assert!(a.steps.windows(2).all(|w| w[1].objective >= w[0].objective));
    }

    #[test]
    fn config_text_round_trip(seed in any::<u64>(), beam in proptest::option::of(1usize..500), order in 1usize..7) {
        let cfg = PipelineConfig { seed, beam, ngram_order: order, ..PipelineConfig::default() };
        let text = cfg.to_text();
        let back = PipelineConfig::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn weight_text_round_trip(values in proptest::collection::vec(-10.0f64..10.0, 11)) {
        let mut w = WeightVector::zeros();
        let names: Vec<&str> = w.iter().map(|(n, _)| n).collect();
        for (n, v) in names.iter().zip(&values) {
            w.set(n, *v).unwrap();
        }
        prop_assert_eq!(WeightVector::from_text(&w.to_text()).unwrap(), w);
    }
}
