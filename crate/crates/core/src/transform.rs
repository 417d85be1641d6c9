//! AMR ⇄ SBMT tree transformations.
//!
//! The forward direction is `disconnect` → `push_labels` → (`reorder`) →
//! `restructure` → `relabel_strings`; [`to_amr`] inverts any state of that
//! pipeline. Role labels and their fillers stay adjacent siblings in every
//! state, which is what makes the inverse deterministic.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::align::{count_crossings, AlignmentError, AlignmentSet, AmrElement, LeafAlignment};
use crate::amr::{AmrError, AmrGraph, Role, Target};
use crate::tree::{
    SbmtTree, INSTANCE_LABEL, PLACEHOLDER, PRETERMINAL_MARKER, ROOT_LABEL, STRING_PRETERMINAL,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("instance `{0}` has more than one parent; disconnect first")]
    NotATree(String),
    #[error("role label `{0}` has no adjacent filler")]
    UnpairedRoleLabel(String),
    #[error("instance node has no concept")]
    MissingConcept,
    #[error("instance node has a second concept `{0}`")]
    ExtraConcept(String),
    #[error("unexpected node `{0}` inside an instance")]
    UnexpectedNode(String),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Graph(#[from] AmrError),
}

/// Intermediate labels used when binarizing instance nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestructureMode {
    /// The instance's own concept.
    Concept,
    /// The label of the role the instance fills (`ROOT` at the root).
    Role,
}

impl std::str::FromStr for RestructureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concept" => Ok(RestructureMode::Concept),
            "role" => Ok(RestructureMode::Role),
            other => Err(format!("unknown restructure mode `{other}`")),
        }
    }
}

impl std::fmt::Display for RestructureMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RestructureMode::Concept => "concept",
            RestructureMode::Role => "role",
        })
    }
}

/// Which AMR element a tree leaf was generated from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LeafOrigin {
    Concept(String),
    RoleLabel {
        parent: String,
        label: String,
        occurrence: usize,
    },
    Constant {
        parent: String,
        label: String,
        occurrence: usize,
    },
}

// ---------------------------------------------------------------------------
// Instance layout

/// One ordered piece of an instance node: its concept, or a role unit.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Part<'a> {
    Concept(&'a SbmtTree),
    Pair {
        label: &'a SbmtTree,
        filler: &'a SbmtTree,
    },
}

impl<'a> Part<'a> {
    pub(crate) fn trees(&self) -> Vec<&'a SbmtTree> {
        match *self {
            Part::Concept(c) => vec![c],
            Part::Pair { label, filler } => vec![label, filler],
        }
    }
}

pub(crate) fn is_instance(t: &SbmtTree) -> bool {
    t.is_internal() && t.label() == INSTANCE_LABEL
}

fn is_intermediate(t: &SbmtTree) -> bool {
    t.is_internal() && t.label() != INSTANCE_LABEL
}

/// A preterminal of the form `<token>P`.
pub(crate) fn is_role_label_pre(t: &SbmtTree) -> bool {
    match t.pre_token() {
        Some(tok) => {
            let l = t.label();
            l.len() == tok.len() + PRETERMINAL_MARKER.len()
                && l.starts_with(tok)
                && l.ends_with(PRETERMINAL_MARKER)
        }
        None => false,
    }
}

pub(crate) fn is_string_pre_for(t: &SbmtTree, role: &str) -> bool {
    t.is_preterminal()
        && (t.label() == STRING_PRETERMINAL
            || (t.label().len() == role.len() + 1 && t.label().starts_with('S') && &t.label()[1..] == role))
}

fn is_filler_for(t: &SbmtTree, role: &str) -> bool {
    is_instance(t) || is_string_pre_for(t, role)
}

/// Children of an instance node with intermediate (binarization) nodes
/// spliced away.
pub(crate) fn spliced_children(node: &SbmtTree) -> Vec<&SbmtTree> {
    fn go<'a>(children: &'a [SbmtTree], out: &mut Vec<&'a SbmtTree>) {
        for c in children {
            if is_intermediate(c) {
                go(c.children(), out);
            } else {
                out.push(c);
            }
        }
    }
    let mut out = Vec::new();
    go(node.children(), &mut out);
    out
}

/// Split a sequence of sibling subtrees into one concept and role units.
pub(crate) fn classify<'a>(seq: &[&'a SbmtTree]) -> Result<Vec<Part<'a>>, TransformError> {
    let mut parts = Vec::new();
    let mut seen_concept = false;
    let mut i = 0;
    while i < seq.len() {
        let c = seq[i];
        if c.is_preterminal() {
            let tok = c.pre_token().unwrap_or_default();
            if i + 1 < seq.len() && is_role_label_pre(c) && is_filler_for(seq[i + 1], tok) {
                parts.push(Part::Pair {
                    label: c,
                    filler: seq[i + 1],
                });
                i += 2;
                continue;
            }
            if seen_concept {
                return Err(if is_role_label_pre(c) {
                    TransformError::UnpairedRoleLabel(tok.to_string())
                } else {
                    TransformError::ExtraConcept(tok.to_string())
                });
            }
            seen_concept = true;
            parts.push(Part::Concept(c));
            i += 1;
        } else {
            return Err(TransformError::UnexpectedNode(c.label().to_string()));
        }
    }
    if !seen_concept {
        return Err(TransformError::MissingConcept);
    }
    Ok(parts)
}

/// Layout of an instance node, looking through intermediates.
pub(crate) fn instance_parts(node: &SbmtTree) -> Result<Vec<Part<'_>>, TransformError> {
    if !is_instance(node) {
        return Err(TransformError::UnexpectedNode(node.label().to_string()));
    }
    classify(&spliced_children(node))
}

// ---------------------------------------------------------------------------
// Forward transforms

fn fresh_var(taken: &HashSet<String>, next: &mut usize) -> String {
    loop {
        let v = format!("z{next}");
        *next += 1;
        if !taken.contains(&v) {
            return v;
        }
    }
}

/// Keep only the first parent (depth-first, role order) of every instance;
/// every other incoming role is retargeted to a fresh `*` instance.
pub fn disconnect(g: &AmrGraph) -> AmrGraph {
    let mut by_parent: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, r) in g.roles().iter().enumerate() {
        by_parent.entry(r.parent.as_str()).or_default().push(i);
    }
    let mut roles: Vec<Role> = g.roles().to_vec();
    let mut taken: HashSet<String> = g.instances().map(|(v, _)| v.to_string()).collect();
    let mut instances: Vec<(String, String)> = g
        .instances()
        .map(|(v, c)| (v.to_string(), c.to_string()))
        .collect();
    let mut counter = 0;
    let mut visited: HashSet<String> = HashSet::new();
    visited.insert(g.root().to_string());
    let mut stack: Vec<(String, usize)> = vec![(g.root().to_string(), 0)];
    while let Some((var, i)) = stack.pop() {
        let idxs = by_parent.get(var.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        if i >= idxs.len() {
            continue;
        }
        stack.push((var.clone(), i + 1));
        let ri = idxs[i];
        if let Target::Var(t) = &roles[ri].target {
            if visited.contains(t) {
                let ph = fresh_var(&taken, &mut counter);
                taken.insert(ph.clone());
                instances.push((ph.clone(), PLACEHOLDER.to_string()));
                roles[ri].target = Target::Var(ph);
            } else {
                let t = t.clone();
                visited.insert(t.clone());
                stack.push((t, 0));
            }
        }
    }
    AmrGraph::new(g.root(), instances, roles).expect("disconnection preserves validity")
}

/// Replace role edges by label/filler leaf pairs; see [`push_labels_mapped`].
pub fn push_labels(g: &AmrGraph) -> Result<SbmtTree, TransformError> {
    push_labels_mapped(g).map(|(t, _)| t)
}

/// Turn a tree-shaped graph into an SBMT tree, reporting for every leaf the
/// graph element it came from. Each instance becomes an `X` node whose
/// children are its concept preterminal followed by `(<label>P <label>)`
/// filler pairs in role order; string fillers sit under an `X` preterminal.
pub fn push_labels_mapped(g: &AmrGraph) -> Result<(SbmtTree, Vec<LeafOrigin>), TransformError> {
    let mut seen = HashSet::new();
    for r in g.roles() {
        if let Target::Var(v) = &r.target {
            if !seen.insert(v.as_str()) {
                return Err(TransformError::NotATree(v.clone()));
            }
        }
    }
    let mut origins = Vec::new();
    let tree = push_instance(g, g.root(), &mut origins);
    Ok((tree, origins))
}

fn push_instance(g: &AmrGraph, var: &str, origins: &mut Vec<LeafOrigin>) -> SbmtTree {
    let concept = g.concept(var).unwrap_or_default();
    let mut children = vec![SbmtTree::identity_pre(concept)];
    origins.push(LeafOrigin::Concept(var.to_string()));
    let mut occurrences: HashMap<&str, usize> = HashMap::new();
    for role in g.roles_of(var) {
        let k = occurrences.entry(role.label.as_str()).or_insert(0);
        *k += 1;
        let occurrence = *k;
        children.push(SbmtTree::identity_pre(&role.label));
        origins.push(LeafOrigin::RoleLabel {
            parent: var.to_string(),
            label: role.label.clone(),
            occurrence,
        });
        match &role.target {
            Target::Var(child) => children.push(push_instance(g, child, origins)),
            Target::Const(c) => {
                children.push(SbmtTree::pre(STRING_PRETERMINAL, c.as_str()));
                origins.push(LeafOrigin::Constant {
                    parent: var.to_string(),
                    label: role.label.clone(),
                    occurrence,
                });
            }
        }
    }
    SbmtTree::node(INSTANCE_LABEL, children)
}

/// Map element-addressed links onto leaf indices. Instances project to their
/// concept leaf, role edges to their role-label leaf.
pub fn project_alignment(
    alignment: &AlignmentSet,
    origins: &[LeafOrigin],
) -> Result<LeafAlignment, TransformError> {
    let mut index: HashMap<AmrElement, usize> = HashMap::new();
    for (i, o) in origins.iter().enumerate() {
        match o {
            LeafOrigin::Concept(v) => {
                index.insert(AmrElement::Instance(v.clone()), i);
            }
            LeafOrigin::RoleLabel {
                parent,
                label,
                occurrence,
            } => {
                index.insert(
                    AmrElement::Role {
                        parent: parent.clone(),
                        label: label.clone(),
                        occurrence: *occurrence,
                    },
                    i,
                );
            }
            LeafOrigin::Constant { .. } => {}
        }
    }
    let mut links = Vec::with_capacity(alignment.len());
    for (tok, el) in alignment.links() {
        let leaf = index
            .get(el)
            .ok_or_else(|| AlignmentError::UnknownElement(el.to_string()))?;
        links.push((*tok, *leaf));
    }
    Ok(LeafAlignment::new(links))
}

/// Binarize every instance with more than one role, attaching role units
/// outward from the concept: nearest unit first, left before right on ties.
pub fn restructure(t: &SbmtTree, mode: RestructureMode) -> Result<SbmtTree, TransformError> {
    restructure_instance(t, ROOT_LABEL, mode)
}

fn restructure_instance(
    node: &SbmtTree,
    incoming: &str,
    mode: RestructureMode,
) -> Result<SbmtTree, TransformError> {
    let parts = instance_parts(node)?;
    let mut units: Vec<Vec<SbmtTree>> = Vec::with_capacity(parts.len());
    let mut concept_at = 0;
    let mut concept = "";
    for (i, p) in parts.iter().enumerate() {
        match p {
            Part::Concept(c) => {
                concept_at = i;
                concept = c.pre_token().unwrap_or_default();
                units.push(vec![(*c).clone()]);
            }
            Part::Pair { label, filler } => {
                let role = label.pre_token().unwrap_or_default();
                let filler = if is_instance(filler) {
                    restructure_instance(filler, role, mode)?
                } else {
                    (*filler).clone()
                };
                units.push(vec![(*label).clone(), filler]);
            }
        }
    }
    if units.len() <= 2 {
        return Ok(SbmtTree::node(INSTANCE_LABEL, units.concat()));
    }
    let inter = match mode {
        RestructureMode::Concept => concept.to_string(),
        RestructureMode::Role => incoming.to_string(),
    };
    let mut units: Vec<Option<Vec<SbmtTree>>> = units.into_iter().map(Some).collect();
    let mut current = units[concept_at].take().unwrap_or_default();
    let (mut left, mut right) = (concept_at, concept_at);
    let total = units.len();
    for step in 1..total {
        let left_dist = (left > 0).then(|| concept_at - (left - 1));
        let right_dist = (right + 1 < total).then(|| right + 1 - concept_at);
        let take_left = match (left_dist, right_dist) {
            (Some(l), Some(r)) => l <= r,
            (Some(_), None) => true,
            _ => false,
        };
        let inner = if current.len() == 1 {
            current
        } else {
            vec![SbmtTree::node(inter.clone(), current)]
        };
        current = if take_left {
            left -= 1;
            let mut unit = units[left].take().unwrap_or_default();
            unit.extend(inner);
            unit
        } else {
            right += 1;
            let unit = units[right].take().unwrap_or_default();
            let mut v = inner;
            v.extend(unit);
            v
        };
        debug_assert!(step < total);
    }
    Ok(SbmtTree::node(INSTANCE_LABEL, current))
}

/// Relabel string filler preterminals `X` as `S<role>`.
pub fn relabel_strings(t: &SbmtTree) -> SbmtTree {
    match t {
        SbmtTree::Leaf(_) => t.clone(),
        SbmtTree::Node { label, children } => {
            let mut out: Vec<SbmtTree> = children.iter().map(relabel_strings).collect();
            for i in 0..out.len().saturating_sub(1) {
                if is_role_label_pre(&out[i])
                    && out[i + 1].is_preterminal()
                    && out[i + 1].label() == STRING_PRETERMINAL
                {
                    let role = out[i].pre_token().unwrap_or_default().to_string();
                    let tok = out[i + 1].pre_token().unwrap_or_default().to_string();
                    out[i + 1] = SbmtTree::pre(format!("S{role}"), tok);
                }
            }
            SbmtTree::node(label.clone(), out)
        }
    }
}

/// Statistics for one reordered instance node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeReport {
    pub units: usize,
    pub crossings_before: usize,
    pub crossings_after: usize,
    pub permuted: bool,
    /// Source positions aligned to each leaf of each unit, in the original
    /// unit order.
    pub unit_links: Vec<Vec<Vec<usize>>>,
}

/// Result of [`reorder_detailed`].
#[derive(Debug, Clone)]
pub struct Reordering {
    pub tree: SbmtTree,
    pub alignment: LeafAlignment,
    /// `permutation[new_leaf] = old_leaf`.
    pub permutation: Vec<usize>,
    /// One entry per instance node, bottom-up.
    pub nodes: Vec<NodeReport>,
}

/// Permute role units of every instance toward source order.
pub fn reorder(t: &SbmtTree, a: &LeafAlignment) -> Result<(SbmtTree, LeafAlignment), TransformError> {
    let r = reorder_detailed(t, a)?;
    Ok((r.tree, r.alignment))
}

/// Bottom-up greedy reordering. At each instance node the units (concept,
/// and label+filler pairs) are stably sorted by the mean source position
/// aligned into them; an unaligned unit takes the key of the nearest
/// aligned unit before it. The new order is kept only if crossings among
/// the node's links do not increase.
pub fn reorder_detailed(t: &SbmtTree, a: &LeafAlignment) -> Result<Reordering, TransformError> {
    let n = t.leaf_count();
    let aligned = a.by_leaf(n)?;
    let mut nodes = Vec::new();
    let (tree, order) = reorder_instance(t, 0, &aligned, &mut nodes)?;
    let mut new_pos = vec![0; n];
    for (pos, &old) in order.iter().enumerate() {
        new_pos[old] = pos;
    }
    let alignment = LeafAlignment::new(a.links().iter().map(|&(s, l)| (s, new_pos[l])));
    Ok(Reordering {
        tree,
        alignment,
        permutation: order,
        nodes,
    })
}

fn local_crossings(units: &[(SbmtTree, Vec<usize>)], aligned: &[Vec<usize>]) -> usize {
    let links: Vec<(usize, usize)> = units
        .iter()
        .flat_map(|(_, leaves)| leaves.iter())
        .enumerate()
        .flat_map(|(pos, &leaf)| aligned[leaf].iter().map(move |&s| (s, pos)))
        .collect();
    count_crossings(&links)
}

/// Returns the reordered subtree and the original indices of its leaves in
/// their new order.
fn reorder_instance(
    node: &SbmtTree,
    offset: usize,
    aligned: &[Vec<usize>],
    report: &mut Vec<NodeReport>,
) -> Result<(SbmtTree, Vec<usize>), TransformError> {
    let parts = instance_parts(node)?;
    let mut units: Vec<(Vec<SbmtTree>, Vec<usize>)> = Vec::with_capacity(parts.len());
    let mut cursor = offset;
    for p in &parts {
        let mut trees = Vec::new();
        let mut leaves = Vec::new();
        for sub in p.trees() {
            if is_instance(sub) {
                let (t, l) = reorder_instance(sub, cursor, aligned, report)?;
                cursor += l.len();
                trees.push(t);
                leaves.extend(l);
            } else {
                let k = sub.leaf_count();
                leaves.extend(cursor..cursor + k);
                cursor += k;
                trees.push(sub.clone());
            }
        }
        units.push((trees, leaves));
    }

    let mut keys = Vec::with_capacity(units.len());
    let mut last = f64::NEG_INFINITY;
    for (_, leaves) in &units {
        let positions: Vec<usize> = leaves.iter().flat_map(|&l| aligned[l].iter().copied()).collect();
        if !positions.is_empty() {
            last = positions.iter().sum::<usize>() as f64 / positions.len() as f64;
        }
        keys.push(last);
    }
    let mut perm: Vec<usize> = (0..units.len()).collect();
    perm.sort_by(|&x, &y| keys[x].total_cmp(&keys[y]));

    let flat = |order: &[usize]| -> Vec<(SbmtTree, Vec<usize>)> {
        order
            .iter()
            .map(|&u| (SbmtTree::leaf(""), units[u].1.clone()))
            .collect()
    };
    let identity: Vec<usize> = (0..units.len()).collect();
    let before = local_crossings(&flat(&identity), aligned);
    let after = local_crossings(&flat(&perm), aligned);
    let permuted = perm != identity && after <= before;
    let chosen = if after <= before { perm } else { identity };
    report.push(NodeReport {
        units: units.len(),
        crossings_before: before,
        crossings_after: before.min(after),
        permuted,
        unit_links: units
            .iter()
            .map(|(_, leaves)| leaves.iter().map(|&l| aligned[l].clone()).collect())
            .collect(),
    });
    let mut children = Vec::new();
    let mut order = Vec::new();
    for &u in &chosen {
        children.extend(units[u].0.iter().cloned());
        order.extend(units[u].1.iter().copied());
    }
    Ok((SbmtTree::node(INSTANCE_LABEL, children), order))
}

// ---------------------------------------------------------------------------
// Inverse

/// Rebuild the AMR encoded by a tree in any transformation state.
/// Variables are named `v0, v1, ...` in pre-order.
pub fn to_amr(t: &SbmtTree) -> Result<AmrGraph, TransformError> {
    let mut instances = Vec::new();
    let mut roles = Vec::new();
    let root = build_instance(t, &mut instances, &mut roles)?;
    Ok(AmrGraph::new(root, instances, roles)?)
}

fn build_instance(
    node: &SbmtTree,
    instances: &mut Vec<(String, String)>,
    roles: &mut Vec<Role>,
) -> Result<String, TransformError> {
    let parts = instance_parts(node)?;
    let var = format!("v{}", instances.len());
    let concept = parts
        .iter()
        .find_map(|p| match p {
            Part::Concept(c) => c.pre_token(),
            _ => None,
        })
        .ok_or(TransformError::MissingConcept)?;
    instances.push((var.clone(), concept.to_string()));
    for p in &parts {
        if let Part::Pair { label, filler } = p {
            let label = label.pre_token().unwrap_or_default().to_string();
            let slot = roles.len();
            roles.push(Role::new(var.clone(), label, Target::Const(String::new())));
            roles[slot].target = if is_instance(filler) {
                Target::Var(build_instance(filler, instances, roles)?)
            } else {
                Target::Const(filler.pre_token().unwrap_or_default().to_string())
            };
        }
    }
    Ok(var)
}

/// Left-to-right terminal sequence: the AMRese sentence of a tree.
pub fn yield_amrese(t: &SbmtTree) -> Vec<String> {
    t.leaves().into_iter().map(str::to_string).collect()
}

// ---------------------------------------------------------------------------
// Whole pipeline

/// Which optional transforms to apply after label push-down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformConfig {
    pub restructure: Option<RestructureMode>,
    pub relabel: bool,
    pub reorder: bool,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            restructure: Some(RestructureMode::Role),
            relabel: true,
            reorder: true,
        }
    }
}

impl TransformConfig {
    pub fn flat() -> Self {
        TransformConfig {
            restructure: None,
            relabel: false,
            reorder: false,
        }
    }
}

/// A transformed training tree with its leaf-projected alignment.
#[derive(Debug, Clone)]
pub struct Treeified {
    pub tree: SbmtTree,
    pub alignment: LeafAlignment,
    /// Origin of every leaf of `tree`, in leaf order.
    pub origins: Vec<LeafOrigin>,
    /// Crossings of the projected alignment before and after reordering.
    pub crossings: (usize, usize),
}

/// Run the full forward pipeline on one graph.
pub fn treeify(
    g: &AmrGraph,
    alignment: Option<&AlignmentSet>,
    config: &TransformConfig,
) -> Result<Treeified, TransformError> {
    let tree_graph = disconnect(g);
    let (mut tree, mut origins) = push_labels_mapped(&tree_graph)?;
    let mut leaf_alignment = match alignment {
        Some(a) => project_alignment(a, &origins)?,
        None => LeafAlignment::default(),
    };
    let before = count_crossings(leaf_alignment.links());
    if config.reorder && !leaf_alignment.is_empty() {
        let r = reorder_detailed(&tree, &leaf_alignment)?;
        origins = r.permutation.iter().map(|&old| origins[old].clone()).collect();
        tree = r.tree;
        leaf_alignment = r.alignment;
    }
    let after = count_crossings(leaf_alignment.links());
    if let Some(mode) = config.restructure {
        tree = restructure(&tree, mode)?;
    }
    if config.relabel {
        tree = relabel_strings(&tree);
    }
    Ok(Treeified {
        tree,
        alignment: leaf_alignment,
        origins,
        crossings: (before, after),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    const SOLDIER: &str = "(f / fear-01 :ARG0 (s / soldier) :ARG1 (d / die-01 :ARG1 s) :polarity -)";

    fn soldier() -> AmrGraph {
        parse_penman(SOLDIER).unwrap()
    }

    #[test]
    fn disconnect_keeps_first_parent() {
        let g = disconnect(&soldier());
        assert!(g.is_tree());
        assert_eq!(g.instance_count(), 4);
        let die_arg1 = g.roles_of("d").next().unwrap();
        match &die_arg1.target {
            Target::Var(v) => assert_eq!(g.concept(v), Some(PLACEHOLDER)),
            t => panic!("{t:?}"),
        }
        assert_eq!(g.roles_of("f").next().unwrap().target, Target::Var("s".into()));
    }

    #[test]
    fn disconnect_is_identity_on_trees() {
        let g = parse_penman("(a / b :ARG0 (c / d) :mod (e / f))").unwrap();
        assert_eq!(disconnect(&g), g);
    }

    #[test]
    fn flat_tree_shape() {
        let t = push_labels(&disconnect(&soldier())).unwrap();
        assert_eq!(
            t.to_string(),
            "(X (fear-01P fear-01) (ARG0P ARG0) (X (soldierP soldier)) (ARG1P ARG1) \
             (X (die-01P die-01) (ARG1P ARG1) (X (*P *))) (polarityP polarity) (X -))"
        );
        assert!(matches!(
            push_labels(&soldier()),
            Err(TransformError::NotATree(v)) if v == "s"
        ));
    }

    #[test]
    fn single_instance_tree() {
        let t = push_labels(&parse_penman("(a / amr-empty)").unwrap()).unwrap();
        assert_eq!(t.to_string(), "(X (amr-emptyP amr-empty))");
        assert_eq!(yield_amrese(&t), ["amr-empty"]);
    }

    #[test]
    fn concept_restructuring() {
        let t = push_labels(&disconnect(&soldier())).unwrap();
        let r = restructure(&t, RestructureMode::Concept).unwrap();
        assert_eq!(
            r.to_string(),
            "(X (fear-01 (fear-01 (fear-01P fear-01) (ARG0P ARG0) (X (soldierP soldier))) \
             (ARG1P ARG1) (X (die-01P die-01) (ARG1P ARG1) (X (*P *)))) (polarityP polarity) (X -))"
        );
        assert!(r.max_arity() <= 3);
        assert_eq!(yield_amrese(&r), yield_amrese(&t));
    }

    #[test]
    fn role_restructuring_uses_incoming_label() {
        let g =
            parse_penman("(f / fear-01 :ARG0 (s / soldier :mod (b / brave) :quant 3) :polarity -)").unwrap();
        let t = push_labels(&g).unwrap();
        let r = restructure(&t, RestructureMode::Role).unwrap();
        assert_eq!(
            r.to_string(),
            "(X (ROOT (fear-01P fear-01) (ARG0P ARG0) (X (ARG0 (soldierP soldier) (modP mod) \
             (X (braveP brave))) (quantP quant) (X 3))) (polarityP polarity) (X -))"
        );
    }

    #[test]
    fn restructure_outward_from_middle_concept() {
        // units: u0 u1 c u3 u4 -> attach u1, u3, u0, u4
        let t: SbmtTree = "(X (aP a) (X (p0P p0)) (bP b) (X (p1P p1)) (cP c) (dP d) \
                           (X (p3P p3)) (eP e) (X (p4P p4)))"
            .parse()
            .unwrap();
        let r = restructure(&t, RestructureMode::Concept).unwrap();
        assert_eq!(
            r.to_string(),
            "(X (c (aP a) (X (p0P p0)) (c (c (bP b) (X (p1P p1)) (cP c)) (dP d) (X (p3P p3)))) \
             (eP e) (X (p4P p4)))"
        );
        assert_eq!(
            to_amr(&r).unwrap().canonical_key(),
            to_amr(&t).unwrap().canonical_key()
        );
    }

    #[test]
    fn instances_with_one_role_are_unchanged() {
        let t = push_labels(&parse_penman("(a / b :ARG0 (c / d))").unwrap()).unwrap();
        assert_eq!(restructure(&t, RestructureMode::Role).unwrap(), t);
    }

    #[test]
    fn string_relabeling() {
        let g = parse_penman("(a / apple :quant 3 :ARG1-of (q / eat-01 :quant (x / about)) :polarity -)")
            .unwrap();
        let t = relabel_strings(&push_labels(&g).unwrap());
        let s = t.to_string();
        assert!(s.contains("(Squant 3)"));
        assert!(s.contains("(Spolarity -)"));
        assert!(s.contains("(quantP quant) (X (aboutP about))"));
        assert_eq!(to_amr(&t).unwrap().canonical_key(), g.canonical_key());
        let plain = push_labels(&parse_penman("(a / b :ARG0 (c / d))").unwrap()).unwrap();
        assert_eq!(relabel_strings(&plain), plain);
    }

    #[test]
    fn reorder_matches_english_order() {
        // The soldier was not afraid of dying .
        let g = disconnect(&soldier());
        let (t, origins) = push_labels_mapped(&g).unwrap();
        let a: AlignmentSet = "1-s 3-f.polarity.1 4-f 6-d".parse().unwrap();
        let la = project_alignment(&a, &origins).unwrap();
        let r = reorder_detailed(&t, &la).unwrap();
        assert_eq!(
            yield_amrese(&r.tree).join(" "),
            "ARG0 soldier polarity - fear-01 ARG1 die-01 ARG1 *"
        );
        assert!(count_crossings(r.alignment.links()) < count_crossings(la.links()));
        assert_eq!(count_crossings(r.alignment.links()), 0);
    }

    #[test]
    fn monotone_alignment_is_left_alone() {
        let g = parse_penman("(a / b :ARG0 (c / d) :ARG1 (e / f))").unwrap();
        let (t, origins) = push_labels_mapped(&g).unwrap();
        let a: AlignmentSet = "0-a 1-a.ARG0.1 2-c 3-a.ARG1.1 4-e".parse().unwrap();
        let la = project_alignment(&a, &origins).unwrap();
        let r = reorder_detailed(&t, &la).unwrap();
        assert_eq!(r.tree, t);
        assert_eq!(r.alignment, la);
        assert!(r
            .nodes
            .iter()
            .all(|n| n.crossings_before == 0 && n.crossings_after == 0));
    }

    #[test]
    fn reorder_rejects_out_of_range_leaves() {
        let t = push_labels(&parse_penman("(a / b)").unwrap()).unwrap();
        let la = LeafAlignment::new([(0, 5)]);
        assert!(matches!(
            reorder(&t, &la),
            Err(TransformError::Alignment(AlignmentError::LeafOutOfRange { .. }))
        ));
    }

    #[test]
    fn unknown_alignment_element() {
        let g = parse_penman("(a / b)").unwrap();
        let (_, origins) = push_labels_mapped(&g).unwrap();
        let a: AlignmentSet = "0-zz".parse().unwrap();
        assert!(project_alignment(&a, &origins).is_err());
    }

    #[test]
    fn to_amr_errors() {
        let t: SbmtTree = "(X (ARG0P ARG0) (X (aP a)))".parse().unwrap();
        assert_eq!(to_amr(&t).unwrap_err(), TransformError::MissingConcept);
        let t: SbmtTree = "(X (aP a) (bP b))".parse().unwrap();
        assert!(matches!(to_amr(&t), Err(TransformError::UnpairedRoleLabel(_))));
        let t: SbmtTree = "(X (aP a) (person b))".parse().unwrap();
        assert!(matches!(to_amr(&t), Err(TransformError::ExtraConcept(_))));
        let t: SbmtTree = "(X (aP a) (ARG0P ARG0) (ARG1P ARG1) (X (cP c)))".parse().unwrap();
        assert!(matches!(to_amr(&t), Err(TransformError::UnpairedRoleLabel(_))));
        // a filler right after the concept steals it as a role label
        let t: SbmtTree = "(X (aP a) (X (cP c)))".parse().unwrap();
        assert_eq!(to_amr(&t).unwrap_err(), TransformError::MissingConcept);
        let t: SbmtTree = "(X (aP a) c)".parse().unwrap();
        assert!(matches!(to_amr(&t), Err(TransformError::UnexpectedNode(_))));
    }

    #[test]
    fn full_pipeline_inverts_to_disconnected_graph() {
        let a: AlignmentSet = "1-s 3-f.polarity.1 4-f 6-d".parse().unwrap();
        let out = treeify(&soldier(), Some(&a), &TransformConfig::default()).unwrap();
        assert_eq!(
            yield_amrese(&out.tree).join(" "),
            "ARG0 soldier polarity - fear-01 ARG1 die-01 ARG1 *"
        );
        let back = to_amr(&out.tree).unwrap();
        assert_eq!(back.unordered_key(), disconnect(&soldier()).unordered_key());
        assert_eq!(out.origins.len(), out.tree.leaf_count());
        assert!(out.crossings.1 < out.crossings.0);
    }
}
