//! Concept graph: loading, validation and bounded path queries.
//!
//! An ontology is a set of concepts (each with a label and optional
//! synonyms) and a set of links between them. Links keep the direction they
//! were written in, but queries traverse them undirected unless
//! [`Direction::Stored`] is requested.
//!
//! Every path query takes a mandatory depth bound; the number of simple paths
//! grows exponentially with depth on dense graphs.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::normalize;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("ontology parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("failed to read ontology: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid ontology ({} violation(s)):\n  {}", .0.len(), join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown concept `{id}`{}", suggestion_suffix(.suggestions))]
    UnknownConcept { id: String, suggestions: Vec<String> },
    #[error("max depth must be at least 1")]
    InvalidDepth,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n  ")
}

fn suggestion_suffix(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!(" (nearest: {})", s.join(", "))
    }
}

/// Identifier of a concept: one or more of `[A-Za-z0-9_-]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(id: impl Into<String>) -> Option<Self> {
        let id = id.into();
        is_valid_id(&id).then_some(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ConceptId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for ConceptId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for ConceptId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for ConceptId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: ConceptId,
    pub label: String,
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub source: ConceptId,
    pub target: ConceptId,
    pub label: Option<String>,
}

/// The on-disk form of an ontology, before validation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyDocument {
    pub concepts: Vec<ConceptDecl>,
    #[serde(default)]
    pub links: Vec<LinkDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptDecl {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synonyms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDecl {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A broken ontology invariant. Violations are collected, not raised one at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InvalidId { id: String },
    DuplicateId { id: String },
    EmptyLabel { concept: String },
    EmptyTerm { concept: String, term: String },
    DuplicateTerm { concept: String, term: String },
    LexiconCollision { term: String, concepts: Vec<String> },
    DanglingLink { source: String, target: String, missing: String },
    SelfLoop { id: String },
    DuplicateLink { source: String, target: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidId { id } => {
                write!(f, "concept id `{id}` must match [A-Za-z0-9_-]+")
            }
            Violation::DuplicateId { id } => write!(f, "duplicate concept id `{id}`"),
            Violation::EmptyLabel { concept } => write!(f, "concept `{concept}` has an empty label"),
            Violation::EmptyTerm { concept, term } => {
                write!(f, "concept `{concept}`: term {term:?} normalizes to nothing")
            }
            Violation::DuplicateTerm { concept, term } => {
                write!(f, "concept `{concept}` lists term `{term}` more than once")
            }
            Violation::LexiconCollision { term, concepts } => write!(
                f,
                "lexicon collision: term `{term}` is claimed by concepts {}",
                concepts
                    .iter()
                    .map(|c| format!("`{c}`"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            Violation::DanglingLink {
                source,
                target,
                missing,
            } => write!(
                f,
                "link `{source}` -> `{target}` references undeclared concept `{missing}`"
            ),
            Violation::SelfLoop { id } => write!(f, "self-loop link on concept `{id}`"),
            Violation::DuplicateLink { source, target } => {
                write!(f, "duplicate link `{source}` -> `{target}`")
            }
        }
    }
}

impl OntologyDocument {
    pub fn concept(mut self, id: &str, label: &str, synonyms: &[&str]) -> Self {
        self.concepts.push(ConceptDecl {
            id: id.to_string(),
            label: label.to_string(),
            synonyms: synonyms.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn link(mut self, source: &str, target: &str, label: Option<&str>) -> Self {
        self.links.push(LinkDecl {
            source: source.to_string(),
            target: target.to_string(),
            label: label.map(str::to_string),
        });
        self
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let mut ids = HashSet::new();
        for c in &self.concepts {
            if !is_valid_id(&c.id) {
                out.push(Violation::InvalidId { id: c.id.clone() });
            }
            if !ids.insert(c.id.as_str()) {
                out.push(Violation::DuplicateId { id: c.id.clone() });
            }
            if c.label.trim().is_empty() {
                out.push(Violation::EmptyLabel {
                    concept: c.id.clone(),
                });
            }
        }

        // term -> owning concepts, in first-seen order
        let mut owners: Vec<(Vec<String>, Vec<String>)> = Vec::new();
        let mut term_pos: HashMap<Vec<String>, usize> = HashMap::new();
        for c in &self.concepts {
            let mut own = HashSet::new();
            let terms = (!c.label.trim().is_empty())
                .then_some(&c.label)
                .into_iter()
                .chain(&c.synonyms);
            for term in terms {
                let norm = normalize(term);
                if norm.is_empty() {
                    out.push(Violation::EmptyTerm {
                        concept: c.id.clone(),
                        term: term.clone(),
                    });
                    continue;
                }
                if !own.insert(norm.clone()) {
                    out.push(Violation::DuplicateTerm {
                        concept: c.id.clone(),
                        term: norm.join(" "),
                    });
                    continue;
                }
                match term_pos.get(&norm) {
                    Some(&i) => owners[i].1.push(c.id.clone()),
                    None => {
                        term_pos.insert(norm.clone(), owners.len());
                        owners.push((norm, vec![c.id.clone()]));
                    }
                }
            }
        }
        for (term, concepts) in owners {
            if concepts.len() > 1 {
                out.push(Violation::LexiconCollision {
                    term: term.join(" "),
                    concepts,
                });
            }
        }

        let mut pairs = HashSet::new();
        for l in &self.links {
            for end in [&l.source, &l.target] {
                if !ids.contains(end.as_str()) {
                    out.push(Violation::DanglingLink {
                        source: l.source.clone(),
                        target: l.target.clone(),
                        missing: end.clone(),
                    });
                }
            }
            if l.source == l.target {
                out.push(Violation::SelfLoop {
                    id: l.source.clone(),
                });
            } else if !pairs.insert((l.source.as_str(), l.target.as_str())) {
                out.push(Violation::DuplicateLink {
                    source: l.source.clone(),
                    target: l.target.clone(),
                });
            }
        }
        out
    }

    pub fn into_ontology(self) -> Result<Ontology, OntologyError> {
        Ontology::from_document(self)
    }
}

/// Parses and validates an ontology document (JSON, UTF-8).
pub fn load_ontology<R: Read>(mut source: R) -> Result<Ontology, OntologyError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let body = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(&bytes);
    let doc: OntologyDocument = serde_json::from_slice(body).map_err(|e| OntologyError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ontology::from_document(doc)
}

/// Traversal mode for path and closure queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Direction {
    /// Links are followed both ways.
    #[default]
    Undirected,
    /// Links are followed only from source to target.
    Stored,
}

/// A simple path through the concept graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemanticPath {
    pub nodes: Vec<ConceptId>,
}

impl SemanticPath {
    pub fn depth(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> &ConceptId {
        &self.nodes[0]
    }

    pub fn end(&self) -> &ConceptId {
        &self.nodes[self.nodes.len() - 1]
    }

    /// Concepts strictly between the endpoints.
    pub fn intermediates(&self) -> &[ConceptId] {
        if self.nodes.len() <= 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }
}

impl fmt::Display for SemanticPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    node: usize,
    link: usize,
}

/// A validated, immutable concept graph.
#[derive(Debug, Clone)]
pub struct Ontology {
    concepts: Vec<Concept>,
    links: Vec<Link>,
    index: HashMap<ConceptId, usize>,
    // adjacency lists sorted by neighbor id
    forward: Vec<Vec<Edge>>,
    backward: Vec<Vec<Edge>>,
    both: Vec<Vec<Edge>>,
}

impl Ontology {
    pub fn from_document(doc: OntologyDocument) -> Result<Self, OntologyError> {
        let violations = doc.validate();
        if !violations.is_empty() {
            return Err(OntologyError::Invalid(violations));
        }
        let concepts: Vec<Concept> = doc
            .concepts
            .into_iter()
            .map(|c| Concept {
                id: ConceptId(c.id),
                label: c.label,
                synonyms: c.synonyms,
            })
            .collect();
        let links: Vec<Link> = doc
            .links
            .into_iter()
            .map(|l| Link {
                source: ConceptId(l.source),
                target: ConceptId(l.target),
                label: l.label,
            })
            .collect();
        let index: HashMap<ConceptId, usize> = concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();

        let n = concepts.len();
        let mut forward = vec![Vec::new(); n];
        let mut backward = vec![Vec::new(); n];
        for (li, l) in links.iter().enumerate() {
            let (s, t) = (index[&l.source], index[&l.target]);
            forward[s].push(Edge { node: t, link: li });
            backward[t].push(Edge { node: s, link: li });
        }
        let by_id = |e: &Edge| concepts[e.node].id.clone();
        let mut both = Vec::with_capacity(n);
        for i in 0..n {
            forward[i].sort_by_key(by_id);
            backward[i].sort_by_key(by_id);
            let mut merged: Vec<Edge> = forward[i].iter().chain(&backward[i]).copied().collect();
            // stable: a forward link wins over a reverse one to the same neighbor
            merged.sort_by_key(by_id);
            merged.dedup_by_key(|e| e.node);
            both.push(merged);
        }

        Ok(Self {
            concepts,
            links,
            index,
            forward,
            backward,
            both,
        })
    }

    pub fn to_document(&self) -> OntologyDocument {
        OntologyDocument {
            concepts: self
                .concepts
                .iter()
                .map(|c| ConceptDecl {
                    id: c.id.0.clone(),
                    label: c.label.clone(),
                    synonyms: c.synonyms.clone(),
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkDecl {
                    source: l.source.0.clone(),
                    target: l.target.0.clone(),
                    label: l.label.clone(),
                })
                .collect(),
        }
    }

    /// Re-checks every invariant. Always empty for an ontology built through
    /// [`Ontology::from_document`].
    pub fn validate(&self) -> Vec<Violation> {
        self.to_document().validate()
    }

    /// Concepts in document order.
    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.index.get(id).map(|&i| &self.concepts[i])
    }

    /// The link joining two adjacent concepts, and whether it is stored in
    /// the `from -> to` direction.
    pub fn link_between(&self, from: &str, to: &str) -> Option<(&Link, bool)> {
        let (a, b) = (*self.index.get(from)?, *self.index.get(to)?);
        if let Some(e) = self.forward[a].iter().find(|e| e.node == b) {
            return Some((&self.links[e.link], true));
        }
        self.backward[a]
            .iter()
            .find(|e| e.node == b)
            .map(|e| (&self.links[e.link], false))
    }

    /// Up to `n` concept ids closest to `id` by edit distance (case-insensitive).
    pub fn nearest_ids(&self, id: &str, n: usize) -> Vec<String> {
        let needle = id.to_lowercase();
        let mut scored: Vec<(usize, &str)> = self
            .concepts
            .iter()
            .map(|c| {
                let d = strsim::levenshtein(&needle, &c.id.0.to_lowercase());
                (d, c.id.as_str())
            })
            .collect();
        scored.sort();
        scored.into_iter().take(n).map(|(_, s)| s.to_string()).collect()
    }

    fn position(&self, id: &str) -> Result<usize, OntologyError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| OntologyError::UnknownConcept {
                id: id.to_string(),
                suggestions: self.nearest_ids(id, 3),
            })
    }

    fn neighbors(&self, dir: Direction, i: usize) -> &[Edge] {
        match dir {
            Direction::Undirected => &self.both[i],
            Direction::Stored => &self.forward[i],
        }
    }

    fn reverse_neighbors(&self, dir: Direction, i: usize) -> &[Edge] {
        match dir {
            Direction::Undirected => &self.both[i],
            Direction::Stored => &self.backward[i],
        }
    }

    fn path_of(&self, idx: &[usize]) -> SemanticPath {
        SemanticPath {
            nodes: idx.iter().map(|&i| self.concepts[i].id.clone()).collect(),
        }
    }

    pub fn shortest_path(
        &self,
        from: &str,
        to: &str,
        max_depth: usize,
    ) -> Result<Option<SemanticPath>, OntologyError> {
        self.shortest_path_in(Direction::Undirected, from, to, max_depth)
    }

    /// Minimum-edge path of depth at most `max_depth`. Among equally short
    /// paths the one with the lexicographically least id sequence wins.
    pub fn shortest_path_in(
        &self,
        dir: Direction,
        from: &str,
        to: &str,
        max_depth: usize,
    ) -> Result<Option<SemanticPath>, OntologyError> {
        let (s, t) = (self.position(from)?, self.position(to)?);
        if max_depth == 0 {
            return Err(OntologyError::InvalidDepth);
        }

        // distances to the target, so a greedy walk from the source can pick
        // the smallest neighbor that still lies on a shortest path
        let mut dist = vec![usize::MAX; self.len()];
        dist[t] = 0;
        let mut queue = VecDeque::from([t]);
        while let Some(u) = queue.pop_front() {
            if u == s || dist[u] == max_depth {
                continue;
            }
            for e in self.reverse_neighbors(dir, u) {
                if dist[e.node] == usize::MAX {
                    dist[e.node] = dist[u] + 1;
                    queue.push_back(e.node);
                }
            }
        }
        if dist[s] == usize::MAX {
            return Ok(None);
        }

        let mut walk = vec![s];
        let mut cur = s;
        while cur != t {
            let next = self
                .neighbors(dir, cur)
                .iter()
                .map(|e| e.node)
                .find(|&n| dist[n] != usize::MAX && dist[n] + 1 == dist[cur])
                .expect("a shortest-path successor exists for every reached node");
            walk.push(next);
            cur = next;
        }
        Ok(Some(self.path_of(&walk)))
    }

    pub fn all_paths(
        &self,
        from: &str,
        to: &str,
        max_depth: usize,
    ) -> Result<Vec<SemanticPath>, OntologyError> {
        self.all_paths_in(Direction::Undirected, from, to, max_depth)
    }

    /// Every simple path of depth at most `max_depth`, sorted by depth and
    /// then by id sequence.
    pub fn all_paths_in(
        &self,
        dir: Direction,
        from: &str,
        to: &str,
        max_depth: usize,
    ) -> Result<Vec<SemanticPath>, OntologyError> {
        let (s, t) = (self.position(from)?, self.position(to)?);
        if max_depth == 0 {
            return Err(OntologyError::InvalidDepth);
        }
        let mut found = Vec::new();
        let mut on_path = vec![false; self.len()];
        let mut stack = vec![s];
        on_path[s] = true;
        self.extend_paths(dir, t, max_depth, &mut stack, &mut on_path, &mut found);
        let mut paths: Vec<SemanticPath> = found.iter().map(|p| self.path_of(p)).collect();
        paths.sort_by(|a, b| (a.depth(), &a.nodes).cmp(&(b.depth(), &b.nodes)));
        Ok(paths)
    }

    fn extend_paths(
        &self,
        dir: Direction,
        target: usize,
        max_depth: usize,
        stack: &mut Vec<usize>,
        on_path: &mut [bool],
        found: &mut Vec<Vec<usize>>,
    ) {
        let cur = *stack.last().unwrap();
        if cur == target {
            found.push(stack.clone());
            return;
        }
        if stack.len() > max_depth {
            return;
        }
        for e in self.neighbors(dir, cur) {
            if on_path[e.node] {
                continue;
            }
            on_path[e.node] = true;
            stack.push(e.node);
            self.extend_paths(dir, target, max_depth, stack, on_path, found);
            stack.pop();
            on_path[e.node] = false;
        }
    }

    pub fn reachable_set(
        &self,
        from: &str,
        max_depth: usize,
    ) -> Result<BTreeSet<ConceptId>, OntologyError> {
        self.reachable_set_in(Direction::Undirected, from, max_depth)
    }

    /// Concepts within `max_depth` hops of `from`, including `from` itself.
    pub fn reachable_set_in(
        &self,
        dir: Direction,
        from: &str,
        max_depth: usize,
    ) -> Result<BTreeSet<ConceptId>, OntologyError> {
        Ok(self
            .reachable_by_depth_in(dir, from, max_depth)?
            .into_iter()
            .map(|(id, _)| id)
            .collect())
    }

    /// Reachable concepts with their hop distance, sorted by (distance, id).
    pub fn reachable_by_depth_in(
        &self,
        dir: Direction,
        from: &str,
        max_depth: usize,
    ) -> Result<Vec<(ConceptId, usize)>, OntologyError> {
        let s = self.position(from)?;
        let mut dist = vec![usize::MAX; self.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if dist[u] == max_depth {
                continue;
            }
            for e in self.neighbors(dir, u) {
                if dist[e.node] == usize::MAX {
                    dist[e.node] = dist[u] + 1;
                    queue.push_back(e.node);
                }
            }
        }
        let mut out: Vec<(ConceptId, usize)> = dist
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != usize::MAX)
            .map(|(i, &d)| (self.concepts[i].id.clone(), d))
            .collect();
        out.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
        Ok(out)
    }
}
