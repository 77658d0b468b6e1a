//! Latent table discovery.
//!
//! Cells of one column in each table are matched to concepts, every
//! (left match, right match) pair is connected by a bounded shortest path,
//! and each connected pair yields a `(subject, predicate, object)` row. Rows
//! with identical text are merged and their provenance unioned.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::matcher::{build_lexicon, ConceptMatch, LexiconError};
use crate::ontology::{ConceptId, Direction, Ontology, OntologyError, SemanticPath};
use crate::tabular::{Table, TableError};

pub const DEFAULT_MAX_DEPTH: usize = 4;
pub const CONDITION_HEADER: &str = "Condition";

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("max depth must be at least 1")]
    InvalidDepth,
    #[error("latent table needs at least 3 columns (subject, predicate, object), found {0}")]
    TooFewColumns(usize),
}

/// What goes in the predicate column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PredicateMode {
    /// The left cell's leftover tokens ("High"). Falls back to [`PredicateMode::Path`]
    /// for rows whose left cell has no qualifier.
    #[default]
    Qualifier,
    /// `via` plus the labels of the concepts between the two endpoints.
    Path,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscoveryRequest {
    pub left_column: String,
    pub right_column: String,
    /// Right-table column shown as the object instead of the matched cell.
    pub projection: Option<String>,
    pub max_depth: usize,
    pub predicate_mode: PredicateMode,
    pub direction: Direction,
}

impl DiscoveryRequest {
    pub fn new(left_column: impl Into<String>, right_column: impl Into<String>) -> Self {
        Self {
            left_column: left_column.into(),
            right_column: right_column.into(),
            projection: None,
            max_depth: DEFAULT_MAX_DEPTH,
            predicate_mode: PredicateMode::default(),
            direction: Direction::default(),
        }
    }

    pub fn with_projection(mut self, column: impl Into<String>) -> Self {
        self.projection = Some(column.into());
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_mode(mut self, mode: PredicateMode) -> Self {
        self.predicate_mode = mode;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }
}

/// One source pair behind a latent row (0-based row indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub left_row: usize,
    pub right_row: usize,
    /// Leftover tokens of the right cell; kept here, never in the predicate.
    pub right_qualifier: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentRow {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    /// Path of the first source pair that produced this row.
    pub path: SemanticPath,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiscoveryStats {
    pub pairs_examined: usize,
    pub paths_found: usize,
    pub rows_emitted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentTable {
    pub headers: [String; 3],
    pub rows: Vec<LatentRow>,
    pub left_table: String,
    pub right_table: String,
    pub stats: DiscoveryStats,
}

impl LatentTable {
    pub fn triples(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.rows
            .iter()
            .map(|r| (r.subject.as_str(), r.predicate.as_str(), r.object.as_str()))
    }
}

pub fn discover(
    req: &DiscoveryRequest,
    left: &Table,
    right: &Table,
    o: &Ontology,
) -> Result<LatentTable, DiscoveryError> {
    discover_with(req, left, right, o, Execution::Parallel)
}

struct Candidate {
    subject: String,
    predicate: String,
    object: String,
    path: SemanticPath,
    provenance: Provenance,
}

pub fn discover_with(
    req: &DiscoveryRequest,
    left: &Table,
    right: &Table,
    o: &Ontology,
    exec: Execution,
) -> Result<LatentTable, DiscoveryError> {
    if req.max_depth == 0 {
        return Err(DiscoveryError::InvalidDepth);
    }
    let lexicon = build_lexicon(o)?;
    let left_values = left.column_values(&req.left_column)?;
    let right_values = right.column_values(&req.right_column)?;
    let projection = req
        .projection
        .as_deref()
        .map(|p| right.column_index(p))
        .transpose()?;

    let left_matches = lexicon.match_column(&left_values);
    let right_matches = lexicon.match_column(&right_values);

    let object_of = |row: usize| match projection {
        Some(c) => right.rows[row][c].clone(),
        None => right_values[row].1.to_string(),
    };

    let connect_left = |(left_row, lm): &(usize, ConceptMatch)| -> Result<Vec<Candidate>, OntologyError> {
        let mut paths: HashMap<&ConceptId, Option<SemanticPath>> = HashMap::new();
        let mut out = Vec::new();
        for (right_row, rm) in &right_matches {
            let path = match paths.get(&rm.concept) {
                Some(p) => p.clone(),
                None => {
                    let p = o.shortest_path_in(
                        req.direction,
                        lm.concept.as_str(),
                        rm.concept.as_str(),
                        req.max_depth,
                    )?;
                    paths.insert(&rm.concept, p.clone());
                    p
                }
            };
            let Some(path) = path else { continue };
            out.push(Candidate {
                subject: label_of(o, &lm.concept),
                predicate: predicate_for(req.predicate_mode, lm, &path, o),
                object: object_of(*right_row),
                path,
                provenance: Provenance {
                    left_row: *left_row,
                    right_row: *right_row,
                    right_qualifier: rm.qualifier.clone(),
                },
            });
        }
        Ok(out)
    };

    let per_left: Vec<Vec<Candidate>> = match exec {
        Execution::Serial => left_matches.iter().map(connect_left).collect::<Result<_, _>>()?,
        Execution::Parallel => left_matches
            .par_iter()
            .map(connect_left)
            .collect::<Result<_, _>>()?,
    };

    // serial merge in (left row, right row) scan order
    let mut stats = DiscoveryStats {
        pairs_examined: left_matches.len() * right_matches.len(),
        ..DiscoveryStats::default()
    };
    let mut merged: IndexMap<(String, String, String), LatentRow> = IndexMap::new();
    for c in per_left.into_iter().flatten() {
        stats.paths_found += 1;
        let key = (c.subject, c.predicate, c.object);
        match merged.get_mut(&key) {
            Some(row) => row.provenance.push(c.provenance),
            None => {
                let row = LatentRow {
                    subject: key.0.clone(),
                    predicate: key.1.clone(),
                    object: key.2.clone(),
                    path: c.path,
                    provenance: vec![c.provenance],
                };
                merged.insert(key, row);
            }
        }
    }
    let rows: Vec<LatentRow> = merged.into_values().collect();
    stats.rows_emitted = rows.len();

    let object_header = req
        .projection
        .as_deref()
        .unwrap_or(&req.right_column)
        .trim()
        .to_string();
    Ok(LatentTable {
        headers: [
            req.left_column.trim().to_string(),
            CONDITION_HEADER.to_string(),
            object_header,
        ],
        rows,
        left_table: left.name.clone(),
        right_table: right.name.clone(),
        stats,
    })
}

fn label_of(o: &Ontology, id: &ConceptId) -> String {
    o.concept(id.as_str())
        .map(|c| c.label.clone())
        .unwrap_or_else(|| id.to_string())
}

fn predicate_for(mode: PredicateMode, lm: &ConceptMatch, path: &SemanticPath, o: &Ontology) -> String {
    match mode {
        PredicateMode::Qualifier if !lm.qualifier_surface.is_empty() => lm.qualifier_text(),
        _ => path_predicate(path, o),
    }
}

/// `"via Fever"`, `"via A, B"`; `"directly related"` when nothing lies between.
pub fn path_predicate(path: &SemanticPath, o: &Ontology) -> String {
    let between = path.intermediates();
    if between.is_empty() {
        return "directly related".to_string();
    }
    let labels: Vec<String> = between.iter().map(|id| label_of(o, id)).collect();
    format!("via {}", labels.join(", "))
}

/// One traversed link, oriented along the path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hop {
    pub from: String,
    pub to: String,
    pub link_label: Option<String>,
    /// False when the link is stored `to -> from`.
    pub forward: bool,
}

impl Hop {
    fn arrow(&self) -> String {
        match (&self.link_label, self.forward) {
            (Some(l), true) => format!("—({l})→"),
            (Some(l), false) => format!("←({l})—"),
            (None, true) => "—→".to_string(),
            (None, false) => "←—".to_string(),
        }
    }
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.from, self.arrow(), self.to)
    }
}

/// Human-readable inference chain behind a latent row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub start: String,
    pub hops: Vec<Hop>,
    /// `"Diagnosis row 1, Drug row 1"` per source pair, 1-based.
    pub sources: Vec<String>,
}

impl Trace {
    /// Single-line form: the chained path followed by its sources.
    pub fn compact(&self) -> String {
        let mut s = self.start.clone();
        for h in &self.hops {
            s.push(' ');
            s.push_str(&h.arrow());
            s.push(' ');
            s.push_str(&h.to);
        }
        format!("{s}; from {}", self.sources.join("; "))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hops.is_empty() {
            writeln!(f, "{}", self.start)?;
        }
        for h in &self.hops {
            writeln!(f, "{h}")?;
        }
        write!(f, "from {}", self.sources.join("; "))
    }
}

pub fn explain(lt: &LatentTable, row: &LatentRow, o: &Ontology) -> Trace {
    let nodes = &row.path.nodes;
    let hops = nodes
        .windows(2)
        .map(|w| {
            let link = o.link_between(w[0].as_str(), w[1].as_str());
            Hop {
                from: label_of(o, &w[0]),
                to: label_of(o, &w[1]),
                link_label: link.and_then(|(l, _)| l.label.clone()),
                forward: link.is_none_or(|(_, fwd)| fwd),
            }
        })
        .collect();
    let sources = row
        .provenance
        .iter()
        .map(|p| {
            format!(
                "{} row {}, {} row {}",
                lt.left_table,
                p.left_row + 1,
                lt.right_table,
                p.right_row + 1
            )
        })
        .collect();
    Trace {
        start: label_of(o, &nodes[0]),
        hops,
        sources,
    }
}

pub const PATH_COLUMN: &str = "path";
pub const SOURCE_ROWS_COLUMN: &str = "source_rows";

/// Flattens a latent table for writing. With `provenance`, adds a `path`
/// column (concept ids joined by ` -> `) and a `source_rows` column of
/// 1-based `left:right` pairs separated by `;`.
pub fn latent_to_table(lt: &LatentTable, provenance: bool) -> Table {
    let mut columns = lt.headers.to_vec();
    if provenance {
        columns.push(PATH_COLUMN.to_string());
        columns.push(SOURCE_ROWS_COLUMN.to_string());
    }
    let rows = lt
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.subject.clone(), r.predicate.clone(), r.object.clone()];
            if provenance {
                cells.push(r.path.to_string());
                cells.push(
                    r.provenance
                        .iter()
                        .map(|p| format!("{}:{}", p.left_row + 1, p.right_row + 1))
                        .collect::<Vec<_>>()
                        .join(";"),
                );
            }
            cells
        })
        .collect();
    Table {
        name: "latent".to_string(),
        columns,
        rows,
    }
}

/// Reads back the `(subject, predicate, object)` columns of a written latent
/// table; they are the first three columns, whatever their headers.
pub fn statements_from_table(t: &Table) -> Result<Vec<(String, String, String)>, DiscoveryError> {
    if t.columns.len() < 3 {
        return Err(DiscoveryError::TooFewColumns(t.columns.len()));
    }
    Ok(t.rows
        .iter()
        .map(|r| (r[0].clone(), r[1].clone(), r[2].clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::load_ontology;
    use crate::tabular::load_table;

    fn fixtures() -> (Table, Table, Ontology) {
        (
            load_table(include_bytes!("../fixtures/diagnosis.csv").as_slice(), "Diagnosis", b',').unwrap(),
            load_table(include_bytes!("../fixtures/drug.csv").as_slice(), "Drug", b',').unwrap(),
            load_ontology(include_bytes!("../fixtures/body.onto").as_slice()).unwrap(),
        )
    }

    fn case_study() -> DiscoveryRequest {
        DiscoveryRequest::new("Intervention", "Chemical Composition").with_projection("Name")
    }

    fn spo(lt: &LatentTable) -> Vec<(&str, &str, &str)> {
        lt.triples().collect()
    }

    #[test]
    fn reproduces_case_study_rows() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        let mut got = spo(&lt);
        got.sort();
        let mut want = vec![
            ("Temperature", "High", "Crocin"),
            ("Temperature", "High", "Dolo Cold"),
            ("Blood Pressure", "High", "Amlogard"),
            ("Blood Sugar", "High", "Glibenclamide"),
            ("Haemoglobin", "Low", "Feosol"),
        ];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(lt.headers, ["Intervention", "Condition", "Name"]);
        assert_eq!(
            lt.stats,
            DiscoveryStats {
                pairs_examined: 25,
                paths_found: 6,
                rows_emitted: 5
            }
        );
    }

    #[test]
    fn scan_order_is_kept() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        assert_eq!(
            spo(&lt),
            [
                ("Temperature", "High", "Crocin"),
                ("Temperature", "High", "Dolo Cold"),
                ("Blood Sugar", "High", "Glibenclamide"),
                ("Blood Pressure", "High", "Amlogard"),
                ("Haemoglobin", "Low", "Feosol"),
            ]
        );
    }

    #[test]
    fn duplicate_sources_merge() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        let amlogard = lt.rows.iter().find(|r| r.object == "Amlogard").unwrap();
        let lefts: Vec<usize> = amlogard.provenance.iter().map(|p| p.left_row).collect();
        assert_eq!(lefts, [2, 3]);
    }

    #[test]
    fn empty_left_table() {
        let (_, r, o) = fixtures();
        let l = load_table(b"Complaint,Intervention\n".as_slice(), "Diagnosis", b',').unwrap();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        assert!(lt.rows.is_empty());
    }

    #[test]
    fn depth_one_finds_nothing() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study().with_max_depth(1), &l, &r, &o).unwrap();
        assert!(lt.rows.is_empty());
        assert!(matches!(
            discover(&case_study().with_max_depth(0), &l, &r, &o),
            Err(DiscoveryError::InvalidDepth)
        ));
    }

    #[test]
    fn unknown_columns_fail() {
        let (l, r, o) = fixtures();
        let req = DiscoveryRequest::new("Nope", "Chemical Composition");
        assert!(matches!(discover(&req, &l, &r, &o), Err(DiscoveryError::Table(_))));
        let req = case_study().with_projection("Price");
        assert!(matches!(discover(&req, &l, &r, &o), Err(DiscoveryError::Table(_))));
    }

    #[test]
    fn path_mode_predicates() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study().with_mode(PredicateMode::Path), &l, &r, &o).unwrap();
        let preds: Vec<&str> = lt.rows.iter().map(|r| r.predicate.as_str()).collect();
        assert_eq!(
            preds,
            ["via Fever", "via Fever", "via Diabetes", "via Hypertension", "via Anaemia"]
        );
    }

    #[test]
    fn missing_qualifier_falls_back_to_path() {
        let (_, r, o) = fixtures();
        let l = load_table(b"Intervention\nTemperature\n".as_slice(), "Diagnosis", b',').unwrap();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        assert_eq!(lt.rows[0].predicate, "via Fever");
    }

    #[test]
    fn object_without_projection_is_right_cell() {
        let (l, r, o) = fixtures();
        let req = DiscoveryRequest::new("Intervention", "Chemical Composition");
        let lt = discover(&req, &l, &r, &o).unwrap();
        assert_eq!(lt.headers[2], "Chemical Composition");
        // Crocin and Dolo Cold share a composition and collapse together
        assert_eq!(lt.rows[0].object, "p-AminoPhenol");
        assert_eq!(lt.rows.len(), 4);
        assert_eq!(lt.rows[0].provenance.len(), 2);
    }

    #[test]
    fn explain_first_row() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        let t = explain(&lt, &lt.rows[0], &o);
        assert_eq!(
            t.compact(),
            "Temperature —(indicates)→ Fever —(treated-by)→ p-AminoPhenol; from Diagnosis row 1, Drug row 1"
        );
        assert_eq!(t.hops.len(), 2);
        let text = t.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            [
                "Temperature —(indicates)→ Fever",
                "Fever —(treated-by)→ p-AminoPhenol",
                "from Diagnosis row 1, Drug row 1"
            ]
        );
    }

    #[test]
    fn explain_merged_row() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        let row = lt.rows.iter().find(|r| r.object == "Amlogard").unwrap();
        let t = explain(&lt, row, &o);
        assert_eq!(
            t.sources,
            ["Diagnosis row 3, Drug row 3", "Diagnosis row 4, Drug row 3"]
        );
    }

    #[test]
    fn explain_reverse_link() {
        let (_, _, o) = fixtures();
        let row = LatentRow {
            subject: "p-AminoPhenol".into(),
            predicate: "x".into(),
            object: "y".into(),
            path: o.shortest_path("p-AminoPhenol", "Fever", 2).unwrap().unwrap(),
            provenance: vec![],
        };
        let lt = LatentTable {
            headers: ["a".into(), "b".into(), "c".into()],
            rows: vec![],
            left_table: "L".into(),
            right_table: "R".into(),
            stats: DiscoveryStats::default(),
        };
        assert_eq!(
            explain(&lt, &row, &o).hops[0].to_string(),
            "p-AminoPhenol ←(treated-by)— Fever"
        );
    }

    #[test]
    fn latent_table_flattening() {
        let (l, r, o) = fixtures();
        let lt = discover(&case_study(), &l, &r, &o).unwrap();
        let t = latent_to_table(&lt, false);
        assert_eq!(t.columns, ["Intervention", "Condition", "Name"]);
        assert_eq!(t.rows.len(), 5);

        let t = latent_to_table(&lt, true);
        assert_eq!(t.columns[3..], ["path", "source_rows"]);
        let amlogard = t.rows.iter().find(|r| r[2] == "Amlogard").unwrap();
        assert_eq!(amlogard[3], "Blood-Pressure -> Hypertension -> Amlodipine");
        assert_eq!(amlogard[4], "3:3;4:3");

        let empty = LatentTable {
            rows: vec![],
            ..lt.clone()
        };
        let t = latent_to_table(&empty, false);
        assert!(t.rows.is_empty());
        assert_eq!(t.columns.len(), 3);

        let back = statements_from_table(&latent_to_table(&lt, true)).unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back[0], ("Temperature".into(), "High".into(), "Crocin".into()));
    }

    #[test]
    fn two_column_file_is_rejected() {
        let t = load_table(b"Intervention,Drug\nA,B\n".as_slice(), "x", b',').unwrap();
        assert!(matches!(statements_from_table(&t), Err(DiscoveryError::TooFewColumns(2))));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let (l, r, o) = fixtures();
        for mode in [PredicateMode::Qualifier, PredicateMode::Path] {
            let req = case_study().with_mode(mode);
            let a = discover_with(&req, &l, &r, &o, Execution::Serial).unwrap();
            let b = discover_with(&req, &l, &r, &o, Execution::Parallel).unwrap();
            assert_eq!(a, b);
        }
    }
}
