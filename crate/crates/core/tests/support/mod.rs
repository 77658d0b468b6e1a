//! Brute-force oracles and random case generators shared by the integration
//! suites. Nothing here calls into the path search, matcher or discovery code
//! it is used to check.

#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use ltd::ontology::OntologyDocument;
use ltd::tabular::Table;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Plain graph view of an ontology document: ids in document order plus an
/// undirected adjacency matrix.
pub struct Graph {
    pub ids: Vec<String>,
    pub labels: Vec<String>,
    pub adj: Vec<Vec<bool>>,
}

impl Graph {
    pub fn from_doc(doc: &OntologyDocument) -> Self {
        let ids: Vec<String> = doc.concepts.iter().map(|c| c.id.clone()).collect();
        let labels = doc.concepts.iter().map(|c| c.label.clone()).collect();
        let n = ids.len();
        let mut adj = vec![vec![false; n]; n];
        for l in &doc.links {
            let s = ids.iter().position(|i| *i == l.source).unwrap();
            let t = ids.iter().position(|i| *i == l.target).unwrap();
            adj[s][t] = true;
            adj[t][s] = true;
        }
        Self { ids, labels, adj }
    }

    pub fn index(&self, id: &str) -> usize {
        self.ids.iter().position(|i| i == id).unwrap()
    }

    /// Every simple path from `a` to `b` with at most `max_depth` edges, by
    /// exhaustive depth-first enumeration.
    pub fn simple_paths(&self, a: usize, b: usize, max_depth: usize) -> Vec<Vec<usize>> {
        fn go(g: &Graph, b: usize, k: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            let cur = *path.last().unwrap();
            if cur == b {
                out.push(path.clone());
                return;
            }
            if path.len() - 1 == k {
                return;
            }
            for next in 0..g.ids.len() {
                if g.adj[cur][next] && !path.contains(&next) {
                    path.push(next);
                    go(g, b, k, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, b, max_depth, &mut vec![a], &mut out);
        out
    }

    /// Shortest path by enumeration; ties go to the lexicographically least
    /// id sequence.
    pub fn best_path(&self, a: usize, b: usize, max_depth: usize) -> Option<Vec<String>> {
        self.simple_paths(a, b, max_depth)
            .into_iter()
            .map(|p| p.into_iter().map(|i| self.ids[i].clone()).collect::<Vec<_>>())
            .min_by(|x, y| (x.len(), x).cmp(&(y.len(), y)))
    }

    /// Hop distances from `a` by repeated frontier expansion over the matrix.
    pub fn bfs_distances(&self, a: usize) -> Vec<Option<usize>> {
        let n = self.ids.len();
        let mut dist = vec![None; n];
        dist[a] = Some(0);
        let mut frontier = vec![a];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &u in &frontier {
                for v in 0..n {
                    if self.adj[u][v] && dist[v].is_none() {
                        dist[v] = Some(d);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    /// Reflexive-transitive closure by Warshall's algorithm.
    pub fn warshall(&self) -> Vec<Vec<bool>> {
        let n = self.ids.len();
        let mut r = self.adj.clone();
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if r[i][k] {
                    for j in 0..n {
                        if r[k][j] {
                            r[i][j] = true;
                        }
                    }
                }
            }
        }
        r
    }

    pub fn closure_row(&self, a: usize) -> BTreeSet<String> {
        self.warshall()[a]
            .iter()
            .enumerate()
            .filter(|(_, &x)| x)
            .map(|(j, _)| self.ids[j].clone())
            .collect()
    }
}

fn oracle_tokens(text: &str) -> Vec<(String, String)> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(|w| (w.to_string(), w.to_lowercase()))
        .collect()
}

/// Best concept for a cell by scanning every term of every concept over every
/// position: longest, then earliest, then smallest id. Returns the concept
/// index and the surface qualifier.
pub fn oracle_match(doc: &OntologyDocument, cell: &str) -> Option<(usize, Vec<String>)> {
    let toks = oracle_tokens(cell);
    let norms: Vec<&str> = toks.iter().map(|(_, n)| n.as_str()).collect();
    let mut best: Option<(usize, usize, usize, String)> = None; // (len, start, concept, id)
    for (ci, c) in doc.concepts.iter().enumerate() {
        for term in std::iter::once(&c.label).chain(&c.synonyms) {
            let t: Vec<String> = oracle_tokens(term).into_iter().map(|(_, n)| n).collect();
            if t.is_empty() || t.len() > norms.len() {
                continue;
            }
            for start in 0..=norms.len() - t.len() {
                if norms[start..start + t.len()] == t[..] {
                    let cand = (t.len(), start, ci, c.id.clone());
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            cand.0 > b.0
                                || (cand.0 == b.0 && (cand.1 < b.1 || (cand.1 == b.1 && cand.3 < b.3)))
                        }
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
        }
    }
    let (len, start, ci, _) = best?;
    let qualifier = toks
        .iter()
        .enumerate()
        .filter(|(i, _)| *i < start || *i >= start + len)
        .map(|(_, (s, _))| s.clone())
        .collect();
    Some((ci, qualifier))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OracleMode {
    Qualifier,
    Path,
}

/// Latent rows as a set, from every cell pair and exhaustive path enumeration.
pub fn oracle_discover(
    doc: &OntologyDocument,
    left: &Table,
    left_col: usize,
    right: &Table,
    right_col: usize,
    object_col: usize,
    max_depth: usize,
    mode: OracleMode,
) -> BTreeSet<(String, String, String)> {
    let g = Graph::from_doc(doc);
    let mut out = BTreeSet::new();
    for lrow in &left.rows {
        let Some((lc, qual)) = oracle_match(doc, &lrow[left_col]) else {
            continue;
        };
        for rrow in &right.rows {
            let Some((rc, _)) = oracle_match(doc, &rrow[right_col]) else {
                continue;
            };
            let Some(path) = g.best_path(lc, rc, max_depth) else {
                continue;
            };
            let predicate = if mode == OracleMode::Qualifier && !qual.is_empty() {
                qual.join(" ")
            } else if path.len() <= 2 {
                "directly related".to_string()
            } else {
                let mids: Vec<&str> = path[1..path.len() - 1]
                    .iter()
                    .map(|id| g.labels[g.index(id)].as_str())
                    .collect();
                format!("via {}", mids.join(", "))
            };
            out.insert((g.labels[lc].clone(), predicate, rrow[object_col].clone()));
        }
    }
    out
}

const LABELS: &[&str] = &[
    "Blood",
    "Blood Sugar",
    "Sugar Level",
    "Heart",
    "Heart Rate",
    "Fever",
    "Iron",
    "Iron Dose",
    "Liver",
    "Kidney Stone",
    "Stone",
    "Rash",
];
const QUALIFIERS: &[&str] = &["High", "Low", "Mild", "very high"];
const JUNK: &[&str] = &["unrelated", "nothing here", "xyz", ""];

/// Up to 12 concepts and 20 links; labels overlap by token so longest-match
/// matters, and a few concepts carry synonyms.
pub fn random_ontology<R: Rng>(rng: &mut R) -> OntologyDocument {
    let n = rng.gen_range(1..=12);
    let mut labels: Vec<&str> = LABELS.to_vec();
    labels.shuffle(rng);
    let mut doc = OntologyDocument::default();
    for (i, label) in labels.iter().take(n).enumerate() {
        let syn = format!("Alias{i}");
        let syns: Vec<&str> = if rng.gen_bool(0.3) { vec![syn.as_str()] } else { vec![] };
        doc = doc.concept(&format!("c{i:02}"), label, &syns);
    }
    let wanted = rng.gen_range(0..=20);
    let mut pairs = BTreeSet::new();
    for _ in 0..wanted * 3 {
        if pairs.len() == wanted || n < 2 {
            break;
        }
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && pairs.insert((a, b)) {
            let label = format!("r{}", rng.gen_range(0..3));
            doc = doc.link(&format!("c{a:02}"), &format!("c{b:02}"), Some(&label));
        }
    }
    doc
}

fn random_cell<R: Rng>(rng: &mut R, doc: &OntologyDocument) -> String {
    match rng.gen_range(0..10) {
        0 => JUNK.choose(rng).unwrap().to_string(),
        1 => QUALIFIERS.choose(rng).unwrap().to_string(),
        _ => {
            let c = doc.concepts.choose(rng).unwrap();
            let term = if !c.synonyms.is_empty() && rng.gen_bool(0.3) {
                c.synonyms[0].clone()
            } else {
                c.label.clone()
            };
            match rng.gen_range(0..4) {
                0 => term,
                1 => format!("{} {term}", QUALIFIERS.choose(rng).unwrap()),
                2 => format!("{term} ({})", QUALIFIERS.choose(rng).unwrap()),
                _ => format!("{} {}", QUALIFIERS.choose(rng).unwrap(), term.to_uppercase()),
            }
        }
    }
}

/// Two-column table `[key, other]` with up to 10 rows.
pub fn random_table<R: Rng>(rng: &mut R, doc: &OntologyDocument, name: &str, key: &str, other: &str) -> Table {
    let rows = (0..rng.gen_range(0..=10))
        .map(|i| vec![random_cell(rng, doc), format!("{name}{}", i % 4)])
        .collect();
    Table {
        name: name.to_string(),
        columns: vec![key.to_string(), other.to_string()],
        rows,
    }
}

/// Independent N-Triples line check for the IRI / plain-literal subset.
pub fn ntriples_line_ok(line: &str) -> bool {
    let iri = r#"<[^\x00-\x20<>"{}|^`\\]*>"#;
    let lit = r#""(?:[^"\\\n\r]|\\[tbnrf"'\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*""#;
    let re = regex::Regex::new(&format!(r"^{iri} {iri} (?:{iri}|{lit}) \.$")).unwrap();
    re.is_match(line)
}
