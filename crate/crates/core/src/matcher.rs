//! Thesaurus lookup: resolve free-text cells to ontology concepts.
//!
//! Matching works on token sequences, never raw substrings, so "low" cannot
//! match inside "flower". A cell resolves to at most one concept: the longest
//! lexicon term occurring as a contiguous run of its tokens. Whatever tokens
//! are left over form the qualifier ("High" in "High Blood Pressure").

use std::collections::HashMap;
use std::ops::Range;

use thiserror::Error;

use crate::ontology::{Concept, ConceptId, Ontology};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("lexicon collision: term `{term}` maps to both `{first}` and `{second}`")]
    Collision {
        term: String,
        first: ConceptId,
        second: ConceptId,
    },
    #[error("concept `{concept}`: term {term:?} normalizes to nothing")]
    EmptyTerm { concept: ConceptId, term: String },
}

/// One whitespace-delimited token with edge punctuation removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Original casing.
    pub surface: String,
    pub norm: String,
}

pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .filter_map(|raw| {
            let t = raw.trim_matches(|c: char| !c.is_alphanumeric());
            (!t.is_empty()).then(|| Token {
                surface: t.to_string(),
                norm: t.to_lowercase(),
            })
        })
        .collect()
}

/// Lowercased tokens; intra-token hyphens survive, edge punctuation does not.
pub fn normalize(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.norm).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchKind {
    Label,
    Synonym,
}

impl MatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchKind::Label => "label",
            MatchKind::Synonym => "synonym",
        }
    }
}

/// A cell resolved to a concept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptMatch {
    pub concept: ConceptId,
    pub kind: MatchKind,
    /// Normalized tokens of the whole cell.
    pub tokens: Vec<String>,
    /// Span of `tokens` covered by the lexicon term.
    pub matched: Range<usize>,
    /// Normalized leftover tokens, in cell order.
    pub qualifier: Vec<String>,
    /// Leftover tokens in their original casing.
    pub qualifier_surface: Vec<String>,
}

impl ConceptMatch {
    pub fn matched_tokens(&self) -> &[String] {
        &self.tokens[self.matched.clone()]
    }

    /// Qualifier as written in the cell, e.g. `"High"`.
    pub fn qualifier_text(&self) -> String {
        self.qualifier_surface.join(" ")
    }
}

#[derive(Debug, Clone)]
struct Entry {
    concept: ConceptId,
    kind: MatchKind,
}

/// Normalized term -> concept lookup built from labels and synonyms.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<Vec<String>, Entry>,
    longest: usize,
}

pub fn build_lexicon(o: &Ontology) -> Result<Lexicon, LexiconError> {
    Lexicon::from_concepts(o.concepts())
}

impl Lexicon {
    pub fn from_concepts<'a>(
        concepts: impl IntoIterator<Item = &'a Concept>,
    ) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for c in concepts {
            let terms = std::iter::once((&c.label, MatchKind::Label))
                .chain(c.synonyms.iter().map(|s| (s, MatchKind::Synonym)));
            for (term, kind) in terms {
                let norm = normalize(term);
                if norm.is_empty() {
                    return Err(LexiconError::EmptyTerm {
                        concept: c.id.clone(),
                        term: term.clone(),
                    });
                }
                if let Some(prev) = lex.entries.get(&norm) {
                    return Err(LexiconError::Collision {
                        term: norm.join(" "),
                        first: prev.concept.clone(),
                        second: c.id.clone(),
                    });
                }
                lex.longest = lex.longest.max(norm.len());
                lex.entries.insert(
                    norm,
                    Entry {
                        concept: c.id.clone(),
                        kind,
                    },
                );
            }
        }
        Ok(lex)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact lookup of a whole term.
    pub fn get(&self, term: &str) -> Option<(&ConceptId, MatchKind)> {
        self.entries
            .get(&normalize(term))
            .map(|e| (&e.concept, e.kind))
    }

    pub fn match_cell(&self, cell: &str) -> Option<ConceptMatch> {
        let tokens = tokenize(cell);
        let norms: Vec<String> = tokens.iter().map(|t| t.norm.clone()).collect();
        let n = norms.len();

        // longest term first; ties by earliest start, then smallest id
        let best = (1..=self.longest.min(n)).rev().find_map(|len| {
            (0..=n - len)
                .filter_map(|start| {
                    self.entries
                        .get(&norms[start..start + len])
                        .map(|e| (start..start + len, e))
                })
                .min_by(|(a, x), (b, y)| (a.start, &x.concept).cmp(&(b.start, &y.concept)))
        });

        let (span, entry) = best?;
        let (qualifier, qualifier_surface) = tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| !span.contains(i))
            .map(|(_, t)| (t.norm.clone(), t.surface.clone()))
            .unzip();
        Some(ConceptMatch {
            concept: entry.concept.clone(),
            kind: entry.kind,
            tokens: norms,
            matched: span,
            qualifier,
            qualifier_surface,
        })
    }

    /// Matches each `(row, cell)`; unmatched cells are dropped, order kept.
    pub fn match_column<S: AsRef<str>>(&self, values: &[(usize, S)]) -> Vec<(usize, ConceptMatch)> {
        values
            .iter()
            .filter_map(|(row, cell)| self.match_cell(cell.as_ref()).map(|m| (*row, m)))
            .collect()
    }
}
