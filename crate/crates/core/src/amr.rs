//! AMR graphs and PENMAN notation.
//!
//! An [`AmrGraph`] is a rooted, acyclic graph of instances. Every instance
//! has exactly one concept; role edges point either at another instance or
//! at a string constant. Role order is kept exactly as written so that
//! reading and writing are stable.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

/// What a role edge points at.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Var(String),
    /// A string constant, stored verbatim (quoted constants keep their quotes).
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Role {
    pub parent: String,
    pub label: String,
    pub target: Target,
}

impl Role {
    pub fn new(parent: impl Into<String>, label: impl Into<String>, target: Target) -> Self {
        Role {
            parent: parent.into(),
            label: label.into(),
            target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PenmanErrorKind {
    UnbalancedParens,
    DuplicateVariable(String),
    UndefinedVariable(String),
    MissingConcept(String),
    MultipleConcepts(String),
    Cycle(String),
    Unexpected(String),
    Empty,
}

impl fmt::Display for PenmanErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenmanErrorKind::UnbalancedParens => write!(f, "unbalanced parentheses"),
            PenmanErrorKind::DuplicateVariable(v) => write!(f, "variable `{v}` defined twice"),
            PenmanErrorKind::UndefinedVariable(v) => write!(f, "undefined variable `{v}`"),
            PenmanErrorKind::MissingConcept(v) => write!(f, "instance `{v}` has no concept"),
            PenmanErrorKind::MultipleConcepts(v) => {
                write!(f, "instance `{v}` has more than one concept")
            }
            PenmanErrorKind::Cycle(v) => write!(f, "cycle through variable `{v}`"),
            PenmanErrorKind::Unexpected(t) => write!(f, "unexpected `{t}`"),
            PenmanErrorKind::Empty => write!(f, "no graph found"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmrError {
    #[error("line {line}, column {col}: {kind}")]
    Penman {
        line: usize,
        col: usize,
        kind: PenmanErrorKind,
    },
    #[error("root `{0}` is not an instance")]
    MissingRoot(String),
    #[error("variable `{0}` defined twice")]
    DuplicateVariable(String),
    #[error("role refers to unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("instance `{0}` is not reachable from the root")]
    Unreachable(String),
    #[error("cycle through variable `{0}`")]
    Cycle(String),
}

/// A rooted, labeled, possibly re-entrant DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    root: String,
    instances: IndexMap<String, String>,
    roles: Vec<Role>,
}

impl AmrGraph {
    /// Build a graph, checking every structural invariant.
    pub fn new(
        root: impl Into<String>,
        instances: impl IntoIterator<Item = (String, String)>,
        roles: Vec<Role>,
    ) -> Result<Self, AmrError> {
        let root = root.into();
        let mut map = IndexMap::new();
        for (var, concept) in instances {
            if map.insert(var.clone(), concept).is_some() {
                return Err(AmrError::DuplicateVariable(var));
            }
        }
        let g = AmrGraph {
            root,
            instances: map,
            roles,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), AmrError> {
        if !self.instances.contains_key(&self.root) {
            return Err(AmrError::MissingRoot(self.root.clone()));
        }
        for r in &self.roles {
            if !self.instances.contains_key(&r.parent) {
                return Err(AmrError::UnknownVariable(r.parent.clone()));
            }
            if let Target::Var(v) = &r.target {
                if !self.instances.contains_key(v) {
                    return Err(AmrError::UnknownVariable(v.clone()));
                }
            }
        }
        if let Some(v) = self.find_cycle() {
            return Err(AmrError::Cycle(v));
        }
        let reached = self.reachable();
        if let Some(v) = self.instances.keys().find(|v| !reached.contains(*v)) {
            return Err(AmrError::Unreachable(v.clone()));
        }
        Ok(())
    }

    fn children_index(&self) -> HashMap<&str, Vec<&str>> {
        let mut idx: HashMap<&str, Vec<&str>> = HashMap::new();
        for r in &self.roles {
            if let Target::Var(v) = &r.target {
                idx.entry(r.parent.as_str()).or_default().push(v.as_str());
            }
        }
        idx
    }

    fn find_cycle(&self) -> Option<String> {
        // 0 = unseen, 1 = on stack, 2 = done
        let children = self.children_index();
        let mut state: HashMap<&str, u8> = HashMap::new();
        for start in self.instances.keys() {
            if state.contains_key(start.as_str()) {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
            state.insert(start.as_str(), 1);
            while let Some((node, i)) = stack.pop() {
                let kids = children.get(node).map(Vec::as_slice).unwrap_or(&[]);
                if i < kids.len() {
                    stack.push((node, i + 1));
                    let k = kids[i];
                    match state.get(k) {
                        Some(1) => return Some(k.to_string()),
                        Some(_) => {}
                        None => {
                            state.insert(k, 1);
                            stack.push((k, 0));
                        }
                    }
                } else {
                    state.insert(node, 2);
                }
            }
        }
        None
    }

    fn reachable(&self) -> HashSet<String> {
        let children = self.children_index();
        let mut seen = HashSet::new();
        let mut stack = vec![self.root.as_str()];
        while let Some(v) = stack.pop() {
            if seen.insert(v.to_string()) {
                if let Some(kids) = children.get(v) {
                    stack.extend(kids.iter().copied());
                }
            }
        }
        seen
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.instances.get(var).map(String::as_str)
    }

    /// Instances in definition order.
    pub fn instances(&self) -> impl Iterator<Item = (&str, &str)> {
        self.instances.iter().map(|(v, c)| (v.as_str(), c.as_str()))
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    /// Outgoing roles of `var`, in written order.
    pub fn roles_of<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a Role> + 'a {
        self.roles.iter().filter(move |r| r.parent == var)
    }

    /// Number of role edges pointing at `var`.
    pub fn parent_count(&self, var: &str) -> usize {
        self.roles
            .iter()
            .filter(|r| matches!(&r.target, Target::Var(v) if v == var))
            .count()
    }

    /// True if no instance has more than one parent.
    pub fn is_tree(&self) -> bool {
        let mut seen = HashSet::new();
        self.roles.iter().all(|r| match &r.target {
            Target::Var(v) => seen.insert(v.as_str()),
            Target::Const(_) => true,
        })
    }

    /// Single-line PENMAN with variables renamed `v0, v1, ...`; two graphs
    /// are isomorphic with identical role order iff their keys are equal.
    pub fn canonical_key(&self) -> String {
        emit(self, false)
    }

    /// Order-insensitive structural key: children are sorted, variable names
    /// ignored. Re-entrant nodes are unfolded, so for trees this is exactly
    /// unordered isomorphism.
    pub fn unordered_key(&self) -> String {
        fn go(g: &AmrGraph, var: &str, depth: usize) -> String {
            let mut parts: Vec<String> = g
                .roles_of(var)
                .map(|r| match &r.target {
                    Target::Var(v) if depth < 64 => format!(":{} {}", r.label, go(g, v, depth + 1)),
                    Target::Var(_) => format!(":{} ...", r.label),
                    Target::Const(c) => format!(":{} {}", r.label, c),
                })
                .collect();
            parts.sort();
            format!("({} {})", g.concept(var).unwrap_or("?"), parts.join(" "))
        }
        go(self, &self.root, 0)
    }

    /// Copy of the graph with concepts and constants lowercased.
    pub fn lowercased(&self) -> AmrGraph {
        AmrGraph {
            root: self.root.clone(),
            instances: self
                .instances
                .iter()
                .map(|(v, c)| (v.clone(), c.to_lowercase()))
                .collect(),
            roles: self
                .roles
                .iter()
                .map(|r| Role {
                    parent: r.parent.clone(),
                    label: r.label.clone(),
                    target: match &r.target {
                        Target::Var(v) => Target::Var(v.clone()),
                        Target::Const(c) => Target::Const(c.to_lowercase()),
                    },
                })
                .collect(),
        }
    }
}

impl fmt::Display for AmrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_penman(self))
    }
}

impl std::str::FromStr for AmrGraph {
    type Err = AmrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_penman(s)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Symbol(String),
    Quoted(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn penman_err(line: usize, col: usize, kind: PenmanErrorKind) -> AmrError {
    AmrError::Penman { line, col, kind }
}

fn lex(text: &str, line0: usize) -> Result<Vec<Spanned>, AmrError> {
    let mut out = Vec::new();
    let mut line = line0;
    let mut col = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let is_break = |c: char| c.is_whitespace() || c == '(' || c == ')' || c == '/' || c == '"';
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let tok = match c {
            '(' => {
                i += 1;
                col += 1;
                Tok::Open
            }
            ')' => {
                i += 1;
                col += 1;
                Tok::Close
            }
            '/' => {
                i += 1;
                col += 1;
                Tok::Slash
            }
            '"' => {
                let mut s = String::from('"');
                i += 1;
                col += 1;
                let mut closed = false;
                while i < chars.len() {
                    let d = chars[i];
                    s.push(d);
                    i += 1;
                    if d == '\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    if d == '\\' && i < chars.len() {
                        s.push(chars[i]);
                        i += 1;
                        col += 1;
                    } else if d == '"' {
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return Err(penman_err(l0, c0, PenmanErrorKind::Unexpected("\"".into())));
                }
                Tok::Quoted(s)
            }
            ':' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                while i < chars.len() && !is_break(chars[i]) {
                    s.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                Tok::Role(s)
            }
            _ => {
                let mut s = String::new();
                while i < chars.len() && !is_break(chars[i]) {
                    s.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                Tok::Symbol(s)
            }
        };
        out.push(Spanned {
            tok,
            line: l0,
            col: c0,
        });
    }
    Ok(out)
}

/// Bare symbols of this shape are variable references; anything else
/// (numbers, `-`, `imperative`, ...) is a constant.
fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    instances: IndexMap<String, String>,
    roles: Vec<(Role, Option<(usize, usize)>)>,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Spanned, AmrError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(penman_err(
                self.end.0,
                self.end.1,
                PenmanErrorKind::UnbalancedParens,
            )),
        }
    }

    fn unexpected(t: &Spanned) -> AmrError {
        let text = match &t.tok {
            Tok::Open => "(".to_string(),
            Tok::Close => ")".to_string(),
            Tok::Slash => "/".to_string(),
            Tok::Role(r) => format!(":{r}"),
            Tok::Symbol(s) | Tok::Quoted(s) => s.clone(),
        };
        let kind = if t.tok == Tok::Close {
            PenmanErrorKind::UnbalancedParens
        } else {
            PenmanErrorKind::Unexpected(text)
        };
        penman_err(t.line, t.col, kind)
    }

    /// Parses `( var / concept roles* )` after the opening paren.
    fn node(&mut self, open: &Spanned) -> Result<String, AmrError> {
        let var_tok = self.next()?;
        let var = match &var_tok.tok {
            Tok::Symbol(s) => s.clone(),
            _ => return Err(Self::unexpected(&var_tok)),
        };
        if self.instances.contains_key(&var) {
            return Err(penman_err(
                var_tok.line,
                var_tok.col,
                PenmanErrorKind::DuplicateVariable(var),
            ));
        }
        let mut concept: Option<String> = None;
        loop {
            let t = self.next()?;
            match t.tok {
                Tok::Close => break,
                Tok::Slash => {
                    let c = self.next()?;
                    let text = match &c.tok {
                        Tok::Symbol(s) | Tok::Quoted(s) => s.clone(),
                        _ => return Err(Self::unexpected(&c)),
                    };
                    if concept.is_some() {
                        return Err(penman_err(t.line, t.col, PenmanErrorKind::MultipleConcepts(var)));
                    }
                    concept = Some(text);
                    // register now so nested nodes cannot redefine it
                    self.instances.insert(var.clone(), concept.clone().unwrap());
                }
                Tok::Role(label) => {
                    if concept.is_none() {
                        return Err(penman_err(
                            open.line,
                            open.col,
                            PenmanErrorKind::MissingConcept(var),
                        ));
                    }
                    let filler = self.next()?;
                    match &filler.tok {
                        Tok::Open => {
                            let slot = self.roles.len();
                            self.roles
                                .push((Role::new(var.clone(), label, Target::Var(String::new())), None));
                            let child = self.node(&filler)?;
                            self.roles[slot].0.target = Target::Var(child);
                        }
                        Tok::Symbol(s) => {
                            // resolved once all definitions are known
                            self.roles.push((
                                Role::new(var.clone(), label, Target::Var(s.clone())),
                                Some((filler.line, filler.col)),
                            ));
                        }
                        Tok::Quoted(s) => {
                            self.roles
                                .push((Role::new(var.clone(), label, Target::Const(s.clone())), None));
                        }
                        _ => return Err(Self::unexpected(&filler)),
                    }
                }
                _ => return Err(Self::unexpected(&t)),
            }
        }
        if concept.is_none() {
            return Err(penman_err(
                open.line,
                open.col,
                PenmanErrorKind::MissingConcept(var),
            ));
        }
        Ok(var)
    }
}

fn parse_at(text: &str, line0: usize) -> Result<AmrGraph, AmrError> {
    let toks = lex(text, line0)?;
    let end = toks.last().map(|t| (t.line, t.col + 1)).unwrap_or((line0, 1));
    let mut p = Parser {
        toks,
        pos: 0,
        instances: IndexMap::new(),
        roles: Vec::new(),
        end,
    };
    let open = match p.peek() {
        None => return Err(penman_err(line0, 1, PenmanErrorKind::Empty)),
        Some(t) if t.tok == Tok::Open => p.next()?,
        Some(t) => return Err(Parser::unexpected(t)),
    };
    let root = p.node(&open)?;
    if let Some(t) = p.peek() {
        return Err(Parser::unexpected(t));
    }
    let Parser { instances, roles, .. } = p;
    let mut resolved = Vec::with_capacity(roles.len());
    for (mut role, pos) in roles {
        if let (Some((line, col)), Target::Var(name)) = (pos, &role.target) {
            if !instances.contains_key(name) {
                if looks_like_variable(name) {
                    return Err(penman_err(
                        line,
                        col,
                        PenmanErrorKind::UndefinedVariable(name.clone()),
                    ));
                }
                role.target = Target::Const(name.clone());
            }
        }
        resolved.push(role);
    }
    let g = AmrGraph {
        root,
        instances,
        roles: resolved,
    };
    if let Some(v) = g.find_cycle() {
        return Err(penman_err(line0, 1, PenmanErrorKind::Cycle(v)));
    }
    Ok(g)
}

/// Parse one graph in PENMAN notation.
pub fn parse_penman(text: &str) -> Result<AmrGraph, AmrError> {
    parse_at(text, 1)
}

// ---------------------------------------------------------------------------
// Emission

fn emit(g: &AmrGraph, pretty: bool) -> String {
    let mut names: HashMap<&str, String> = HashMap::new();
    let mut out = String::new();
    emit_node(g, g.root(), 0, pretty, &mut names, &mut out);
    out
}

fn emit_node<'a>(
    g: &'a AmrGraph,
    var: &'a str,
    depth: usize,
    pretty: bool,
    names: &mut HashMap<&'a str, String>,
    out: &mut String,
) {
    let name = format!("v{}", names.len());
    names.insert(var, name.clone());
    out.push('(');
    out.push_str(&name);
    out.push_str(" / ");
    out.push_str(g.concept(var).unwrap_or(""));
    for role in g.roles_of(var) {
        if pretty {
            out.push('\n');
            for _ in 0..=depth {
                out.push_str("    ");
            }
        } else {
            out.push(' ');
        }
        out.push(':');
        out.push_str(&role.label);
        out.push(' ');
        match &role.target {
            Target::Const(c) => out.push_str(c),
            Target::Var(v) => match names.get(v.as_str()) {
                Some(n) => out.push_str(n),
                None => emit_node(g, v, depth + 1, pretty, names, out),
            },
        }
    }
    out.push(')');
}

/// Write a graph as indented PENMAN, naming variables `v0, v1, ...` in
/// first-visit depth-first order.
pub fn emit_penman(g: &AmrGraph) -> String {
    emit(g, true)
}

/// Single-line variant of [`emit_penman`].
pub fn emit_penman_line(g: &AmrGraph) -> String {
    emit(g, false)
}

// ---------------------------------------------------------------------------
// Corpus files

/// One graph of a corpus file with its `#` metadata lines.
#[derive(Debug, Clone, PartialEq)]
pub struct AmrEntry {
    pub metadata: Vec<String>,
    pub graph: AmrGraph,
}

impl AmrEntry {
    /// Value of a `# ::key value` metadata field.
    pub fn meta(&self, key: &str) -> Option<&str> {
        let tag = format!("::{key}");
        self.metadata.iter().find_map(|line| {
            let rest = line.trim_start_matches('#').trim_start();
            let mut fields = rest.split("::").skip(1);
            fields.find_map(|f| {
                let f = f.trim();
                f.strip_prefix(&tag[2..])
                    .filter(|v| v.is_empty() || v.starts_with(' '))
                    .map(str::trim)
            })
        })
    }
}

/// Read blank-line-separated PENMAN graphs; `#` lines are kept as metadata.
pub fn read_amr_corpus(text: &str) -> Result<Vec<AmrEntry>, AmrError> {
    let mut entries = Vec::new();
    let mut meta = Vec::new();
    let mut body = String::new();
    let mut body_line = 0;
    let flush = |meta: &mut Vec<String>,
                 body: &mut String,
                 body_line: usize,
                 entries: &mut Vec<AmrEntry>|
     -> Result<(), AmrError> {
        if !body.trim().is_empty() {
            let graph = parse_at(body, body_line)?;
            entries.push(AmrEntry {
                metadata: std::mem::take(meta),
                graph,
            });
        } else {
            meta.clear();
        }
        body.clear();
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut meta, &mut body, body_line, &mut entries)?;
        } else if trimmed.starts_with('#') && body.is_empty() {
            meta.push(line.to_string());
        } else {
            if body.is_empty() {
                body_line = i + 1;
            }
            body.push_str(line);
            body.push('\n');
        }
    }
    flush(&mut meta, &mut body, body_line, &mut entries)?;
    Ok(entries)
}

pub fn write_amr_corpus(entries: &[AmrEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        for m in &e.metadata {
            out.push_str(m);
            out.push('\n');
        }
        out.push_str(&emit_penman(&e.graph));
        out.push_str("\n\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLDIER: &str = "(f / fear-01 :ARG0 (s / soldier) :ARG1 (d / die-01 :ARG1 s) :polarity -)";

    #[test]
    fn parses_reentrant_example() {
        let g = parse_penman(SOLDIER).unwrap();
        assert_eq!(g.instance_count(), 3);
        assert_eq!(g.roles().len(), 4);
        assert_eq!(g.parent_count("s"), 2);
        assert!(!g.is_tree());
        assert_eq!(
            g.roles()[3].target,
            Target::Const("-".into()),
            "polarity filler is a constant"
        );
        let labels: Vec<_> = g.roles_of("f").map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["ARG0", "ARG1", "polarity"]);
    }

    #[test]
    fn minimal_graph() {
        let g = parse_penman("(a / amr-empty)").unwrap();
        assert_eq!(g.instance_count(), 1);
        assert!(g.roles().is_empty());
        assert_eq!(emit_penman(&g), "(v0 / amr-empty)");
    }

    #[test]
    fn undefined_variable_is_reported_with_position() {
        let err = parse_penman("(x / x :ARG0 y)").unwrap_err();
        assert_eq!(
            err,
            AmrError::Penman {
                line: 1,
                col: 14,
                kind: PenmanErrorKind::UndefinedVariable("y".into())
            }
        );
    }

    #[test]
    fn structural_errors() {
        let kind = |s: &str| match parse_penman(s).unwrap_err() {
            AmrError::Penman { kind, .. } => kind,
            e => panic!("unexpected {e}"),
        };
        assert_eq!(kind("(a / b"), PenmanErrorKind::UnbalancedParens);
        assert_eq!(kind("(a / b))"), PenmanErrorKind::UnbalancedParens);
        assert_eq!(
            kind("(a / b :ARG0 (a / c))"),
            PenmanErrorKind::DuplicateVariable("a".into())
        );
        assert_eq!(
            kind("(a :ARG0 (b / c))"),
            PenmanErrorKind::MissingConcept("a".into())
        );
        assert_eq!(kind("(a / b / c)"), PenmanErrorKind::MultipleConcepts("a".into()));
        assert_eq!(
            kind("(a / b :ARG0 (c / d :ARG1 a))"),
            PenmanErrorKind::Cycle("a".into())
        );
        assert_eq!(kind("   "), PenmanErrorKind::Empty);
    }

    #[test]
    fn error_positions_span_lines() {
        let err = parse_penman("(a / b\n   :ARG0 z2)").unwrap_err();
        assert_eq!(
            err,
            AmrError::Penman {
                line: 2,
                col: 10,
                kind: PenmanErrorKind::UndefinedVariable("z2".into())
            }
        );
    }

    #[test]
    fn constants() {
        let g = parse_penman(
            "(p / person :name (n / name :op1 \"New York\" :op2 3) :mode imperative :ARG0-of (h / have-01))",
        )
        .unwrap();
        let consts: Vec<_> = g
            .roles()
            .iter()
            .filter_map(|r| match &r.target {
                Target::Const(c) => Some(c.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(consts, ["\"New York\"", "3", "imperative"]);
    }

    #[test]
    fn emit_puts_concept_on_first_mention() {
        let g = parse_penman("(a / want-01 :ARG1 (b / go-01 :ARG0 c) :ARG0 (c / boy))").unwrap();
        let text = emit_penman_line(&g);
        assert_eq!(
            text,
            "(v0 / want-01 :ARG1 (v1 / go-01 :ARG0 (v2 / boy)) :ARG0 v2)"
        );
        let back = parse_penman(&text).unwrap();
        assert_eq!(back.canonical_key(), text);
    }

    #[test]
    fn graph_constructor_validates() {
        let inst = |v: &[(&str, &str)]| -> Vec<(String, String)> {
            v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
        };
        assert!(matches!(
            AmrGraph::new("a", inst(&[("a", "x"), ("b", "y")]), vec![]),
            Err(AmrError::Unreachable(_))
        ));
        assert!(matches!(
            AmrGraph::new(
                "a",
                inst(&[("a", "x")]),
                vec![Role::new("a", "ARG0", Target::Var("q".into()))]
            ),
            Err(AmrError::UnknownVariable(_))
        ));
        assert!(matches!(
            AmrGraph::new("z", inst(&[("a", "x")]), vec![]),
            Err(AmrError::MissingRoot(_))
        ));
    }

    #[test]
    fn corpus_with_metadata() {
        let text = "# ::id 1\n# ::snt The soldier was not afraid.\n(f / fear-01\n  :polarity -)\n\n\n# ::id 2\n(a / amr-empty)\n";
        let entries = read_amr_corpus(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].meta("id"), Some("1"));
        assert_eq!(entries[0].meta("snt"), Some("The soldier was not afraid."));
        assert_eq!(entries[1].meta("snt"), None);
        let again = read_amr_corpus(&write_amr_corpus(&entries)).unwrap();
        assert_eq!(again.len(), 2);
        assert_eq!(again[0].metadata, entries[0].metadata);
    }

    #[test]
    fn corpus_error_lines_are_file_relative() {
        let text = "(a / b)\n\n(c / d\n  :ARG0 q)\n";
        match read_amr_corpus(text).unwrap_err() {
            AmrError::Penman { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
    }
}
