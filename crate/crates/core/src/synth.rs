//! Seeded generators for random graphs, alignments and a small template
//! corpus of English sentences with their graphs and alignments.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::align::{AlignmentSet, AmrElement};
use crate::amr::{AmrGraph, Role, Target};

/// Shape of random graphs.
#[derive(Debug, Clone)]
pub struct GraphParams {
    pub max_instances: usize,
    /// Chance of one extra edge to an existing instance, per instance.
    pub reentrancy: f64,
    /// Chance of a constant filler, per instance.
    pub constants: f64,
    pub concepts: Vec<String>,
    pub roles: Vec<String>,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            max_instances: 8,
            reentrancy: 0.15,
            constants: 0.3,
            concepts: ["want-01", "go-02", "boy", "girl", "see-01", "city", "big", "and"]
                .map(String::from)
                .to_vec(),
            roles: ["ARG0", "ARG1", "ARG2", "mod", "op1", "location"]
                .map(String::from)
                .to_vec(),
        }
    }
}

const CONSTANTS: [&str; 4] = ["-", "3", "\"Paris\"", "\"New York\""];
const CONSTANT_ROLES: [&str; 3] = ["polarity", "quant", "op1"];

/// A random rooted DAG. Edges only run from earlier to later instances, so
/// the result is acyclic and every instance is reachable from `v0`.
pub fn random_amr<R: Rng>(rng: &mut R, p: &GraphParams) -> AmrGraph {
    let n = rng.gen_range(1..=p.max_instances.max(1));
    let vars: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let instances: Vec<(String, String)> = vars
        .iter()
        .map(|v| (v.clone(), p.concepts.choose(rng).expect("concepts").clone()))
        .collect();
    let mut roles = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let label = p.roles.choose(rng).expect("roles").clone();
        roles.push(Role::new(
            vars[parent].clone(),
            label,
            Target::Var(vars[i].clone()),
        ));
    }
    for i in 0..n {
        if i + 1 < n && rng.gen_bool(p.reentrancy) {
            let j = rng.gen_range(i + 1..n);
            let label = p.roles.choose(rng).expect("roles").clone();
            roles.push(Role::new(vars[i].clone(), label, Target::Var(vars[j].clone())));
        }
        if rng.gen_bool(p.constants) {
            let k = rng.gen_range(0..CONSTANTS.len());
            roles.push(Role::new(
                vars[i].clone(),
                CONSTANT_ROLES[k.min(CONSTANT_ROLES.len() - 1)],
                Target::Const(CONSTANTS[k].to_string()),
            ));
        }
    }
    roles.shuffle(rng);
    AmrGraph::new(vars[0].clone(), instances, roles).expect("generated graphs are valid")
}

/// Every alignable element of `g`: instances, then roles with occurrences.
pub fn elements(g: &AmrGraph) -> Vec<AmrElement> {
    let mut out: Vec<AmrElement> = g
        .instances()
        .map(|(v, _)| AmrElement::Instance(v.to_string()))
        .collect();
    for (v, _) in g.instances() {
        let mut seen: Vec<(&str, usize)> = Vec::new();
        for r in g.roles_of(v) {
            let k = match seen.iter_mut().find(|(l, _)| *l == r.label) {
                Some((_, k)) => {
                    *k += 1;
                    *k
                }
                None => {
                    seen.push((&r.label, 1));
                    1
                }
            };
            out.push(AmrElement::Role {
                parent: v.to_string(),
                label: r.label.clone(),
                occurrence: k,
            });
        }
    }
    out
}

/// Link each instance with chance `p_instance` and each role with chance
/// `p_role` to a uniformly chosen token.
pub fn random_alignment<R: Rng>(
    rng: &mut R,
    g: &AmrGraph,
    source_len: usize,
    p_instance: f64,
    p_role: f64,
) -> AlignmentSet {
    if source_len == 0 {
        return AlignmentSet::default();
    }
    let links = elements(g).into_iter().filter_map(|e| {
        let p = match e {
            AmrElement::Instance(_) => p_instance,
            AmrElement::Role { .. } => p_role,
        };
        rng.gen_bool(p).then(|| (rng.gen_range(0..source_len), e))
    });
    AlignmentSet::new(links.collect::<Vec<_>>())
}

pub fn random_sentence<R: Rng>(rng: &mut R, len: usize) -> Vec<String> {
    (0..len).map(|_| format!("w{}", rng.gen_range(0..12))).collect()
}

/// A random `(source, graph, alignment)` training tuple.
pub fn random_tuple<R: Rng>(rng: &mut R, p: &GraphParams) -> (Vec<String>, AmrGraph, AlignmentSet) {
    let g = random_amr(rng, p);
    let len = rng.gen_range(1..=g.instance_count() + 3);
    let src = random_sentence(rng, len);
    let a = random_alignment(rng, &g, len, 0.8, 0.2);
    (src, g, a)
}

// ---------------------------------------------------------------------------
// Template corpus

/// One sentence of the template corpus.
#[derive(Debug, Clone)]
pub struct ToyPair {
    pub tokens: Vec<String>,
    pub graph: AmrGraph,
    pub alignment: AlignmentSet,
}

const NOUNS: [&str; 10] = [
    "soldier", "boy", "girl", "teacher", "doctor", "dog", "cat", "child", "king", "farmer",
];
const ADJECTIVES: [&str; 5] = ["big", "small", "old", "young", "happy"];
/// (third person, base form, concept)
const TRANSITIVE: [(&str, &str, &str); 8] = [
    ("sees", "see", "see-01"),
    ("likes", "like", "like-01"),
    ("fears", "fear", "fear-01"),
    ("helps", "help", "help-01"),
    ("finds", "find", "find-01"),
    ("follows", "follow", "follow-01"),
    ("teaches", "teach", "teach-01"),
    ("calls", "call", "call-01"),
];
const INTRANSITIVE: [(&str, &str, &str); 5] = [
    ("sleeps", "sleep", "sleep-01"),
    ("dies", "die", "die-01"),
    ("runs", "run", "run-02"),
    ("laughs", "laugh", "laugh-01"),
    ("sings", "sing", "sing-01"),
];
const CITIES: [&str; 4] = ["Paris", "London", "Rome", "Berlin"];

struct Builder {
    tokens: Vec<String>,
    instances: Vec<(String, String)>,
    roles: Vec<Role>,
    links: Vec<(usize, AmrElement)>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: Vec::new(),
            instances: Vec::new(),
            roles: Vec::new(),
            links: Vec::new(),
        }
    }

    fn word(&mut self, w: &str) -> usize {
        self.tokens.push(w.to_string());
        self.tokens.len() - 1
    }

    fn instance(&mut self, concept: &str) -> String {
        let v = format!("v{}", self.instances.len());
        self.instances.push((v.clone(), concept.to_string()));
        v
    }

    fn align(&mut self, tok: usize, el: AmrElement) {
        self.links.push((tok, el));
    }

    fn role(&mut self, parent: &str, label: &str, target: Target) {
        self.roles.push(Role::new(parent, label, target));
    }

    /// `the [adj] noun`, returning the noun's variable.
    fn noun_phrase<R: Rng>(&mut self, rng: &mut R, adj_chance: f64) -> String {
        self.word("the");
        let adj = rng
            .gen_bool(adj_chance)
            .then(|| *ADJECTIVES.choose(rng).expect("adjectives"));
        let adj_tok = adj.map(|a| self.word(a));
        let noun = *NOUNS.choose(rng).expect("nouns");
        let t = self.word(noun);
        let v = self.instance(noun);
        self.align(t, AmrElement::Instance(v.clone()));
        if let (Some(a), Some(tok)) = (adj, adj_tok) {
            let m = self.instance(a);
            self.role(&v, "mod", Target::Var(m.clone()));
            self.align(tok, AmrElement::Instance(m));
        }
        v
    }

    fn finish(self) -> ToyPair {
        let root = self.instances[0].0.clone();
        ToyPair {
            tokens: self.tokens,
            graph: AmrGraph::new(root, self.instances, self.roles).expect("template graphs are valid"),
            alignment: AlignmentSet::new(self.links),
        }
    }
}

/// One sentence from a fixed set of templates: transitive and intransitive
/// clauses with optional negation and adjectives, coordination, city names,
/// and rarely a control verb whose subject is re-entrant.
pub fn toy_pair<R: Rng>(rng: &mut R) -> ToyPair {
    let mut b = Builder::new();
    let kind = rng.gen_range(0..100);
    match kind {
        // the N V the N .
        0..=39 => {
            let (third, base, concept) = *TRANSITIVE.choose(rng).expect("verbs");
            let verb = b.instance(concept);
            let subj = b.noun_phrase(rng, 0.3);
            let negated = rng.gen_bool(0.2);
            let vtok = if negated {
                b.word("does");
                let n = b.word("not");
                b.role(&verb, "polarity", Target::Const("-".into()));
                b.align(
                    n,
                    AmrElement::Role {
                        parent: verb.clone(),
                        label: "polarity".into(),
                        occurrence: 1,
                    },
                );
                b.word(base)
            } else {
                b.word(third)
            };
            b.align(vtok, AmrElement::Instance(verb.clone()));
            let obj = b.noun_phrase(rng, 0.3);
            b.role(&verb, "ARG0", Target::Var(subj));
            b.role(&verb, "ARG1", Target::Var(obj));
        }
        // the N Vi .
        40..=64 => {
            let (third, base, concept) = *INTRANSITIVE.choose(rng).expect("verbs");
            let verb = b.instance(concept);
            let subj = b.noun_phrase(rng, 0.3);
            let negated = rng.gen_bool(0.2);
            let vtok = if negated {
                b.word("does");
                let n = b.word("not");
                b.role(&verb, "polarity", Target::Const("-".into()));
                b.align(
                    n,
                    AmrElement::Role {
                        parent: verb.clone(),
                        label: "polarity".into(),
                        occurrence: 1,
                    },
                );
                b.word(base)
            } else {
                b.word(third)
            };
            b.align(vtok, AmrElement::Instance(verb.clone()));
            b.role(&verb, "ARG0", Target::Var(subj));
        }
        // the N and the N Vi .
        65..=79 => {
            let (_, base, concept) = *INTRANSITIVE.choose(rng).expect("verbs");
            let verb = b.instance(concept);
            let and = b.instance("and");
            let first = b.noun_phrase(rng, 0.0);
            let and_tok = b.word("and");
            b.align(and_tok, AmrElement::Instance(and.clone()));
            let second = b.noun_phrase(rng, 0.0);
            let vtok = b.word(base);
            b.align(vtok, AmrElement::Instance(verb.clone()));
            b.role(&and, "op1", Target::Var(first));
            b.role(&and, "op2", Target::Var(second));
            b.role(&verb, "ARG0", Target::Var(and));
        }
        // the N visits City .
        80..=94 => {
            let verb = b.instance("visit-01");
            let subj = b.noun_phrase(rng, 0.2);
            let vtok = b.word("visits");
            b.align(vtok, AmrElement::Instance(verb.clone()));
            let city = b.instance("city");
            let name = b.instance("name");
            let c = *CITIES.choose(rng).expect("cities");
            let ctok = b.word(c);
            b.role(&city, "name", Target::Var(name.clone()));
            b.role(&name, "op1", Target::Const(format!("\"{c}\"")));
            b.align(ctok, AmrElement::Instance(city.clone()));
            b.align(ctok, AmrElement::Instance(name.clone()));
            b.align(
                ctok,
                AmrElement::Role {
                    parent: name,
                    label: "op1".into(),
                    occurrence: 1,
                },
            );
            b.role(&verb, "ARG0", Target::Var(subj));
            b.role(&verb, "ARG1", Target::Var(city));
        }
        // the N wants to V the N .  (re-entrant subject)
        _ => {
            let want = b.instance("want-01");
            let subj = b.noun_phrase(rng, 0.0);
            let wtok = b.word("wants");
            b.align(wtok, AmrElement::Instance(want.clone()));
            b.word("to");
            let (_, base, concept) = *TRANSITIVE.choose(rng).expect("verbs");
            let verb = b.instance(concept);
            let vtok = b.word(base);
            b.align(vtok, AmrElement::Instance(verb.clone()));
            let obj = b.noun_phrase(rng, 0.0);
            b.role(&want, "ARG0", Target::Var(subj.clone()));
            b.role(&want, "ARG1", Target::Var(verb.clone()));
            b.role(&verb, "ARG0", Target::Var(subj));
            b.role(&verb, "ARG1", Target::Var(obj));
        }
    }
    b.word(".");
    b.finish()
}

pub fn toy_corpus<R: Rng>(rng: &mut R, n: usize) -> Vec<ToyPair> {
    (0..n).map(|_| toy_pair(rng)).collect()
}

/// Seed of the bundled toy corpus under `data/toy/`.
pub const TOY_SEED: u64 = 2014;
/// Sizes of the bundled train, dev and test splits.
pub const TOY_SPLITS: [(&str, usize); 3] = [("train", 50), ("dev", 20), ("test", 20)];

/// The bundled splits, drawn in order from one stream seeded with [`TOY_SEED`].
pub fn toy_splits() -> Vec<(&'static str, Vec<ToyPair>)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(TOY_SEED);
    TOY_SPLITS
        .iter()
        .map(|&(name, n)| (name, toy_corpus(&mut rng, n)))
        .collect()
}

/// File contents `(amr, src, align)` for one split.
pub fn split_files(pairs: &[ToyPair]) -> (String, String, String) {
    let (mut amr, mut src, mut align) = (String::new(), String::new(), String::new());
    for (i, p) in pairs.iter().enumerate() {
        amr.push_str(&format!("# ::id toy.{}\n", i + 1));
        amr.push_str(&crate::amr::emit_penman(&p.graph));
        amr.push_str("\n\n");
        src.push_str(&p.tokens.join(" "));
        src.push('\n');
        align.push_str(&p.alignment.to_string());
        align.push('\n');
    }
    (amr, src, align)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_graphs_are_valid_and_reproducible() {
        let p = GraphParams::default();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = random_amr(&mut a, &p);
            assert_eq!(g, random_amr(&mut b, &p));
            let al = random_alignment(&mut a, &g, 5, 0.8, 0.3);
            al.validate(&g, 5).unwrap();
            let _ = random_alignment(&mut b, &g, 5, 0.8, 0.3);
        }
    }

    #[test]
    fn template_pairs_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in toy_corpus(&mut rng, 200) {
            p.alignment.validate(&p.graph, p.tokens.len()).unwrap();
            assert_eq!(p.tokens.last().map(String::as_str), Some("."));
        }
    }
}
