//! Latent rows as RDF triples, and N-Triples I/O.
//!
//! The three latent columns map positionally: subject column to triple
//! subject, predicate column to triple predicate, object column to triple
//! object. IRIs are minted under a configurable base:
//!
//! ```text
//! <base>concept/<slug>     subjects
//! <base>predicate/<slug>   predicates
//! <base>entity/<slug>      objects (or a plain literal)
//! ```
//!
//! Only IRIs and plain literals are read and written; no blank nodes, no
//! datatypes, no language tags.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::discovery::LatentTable;

pub const DEFAULT_BASE: &str = "http://example.org/ltd/";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RdfError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("cannot mint an IRI from an empty {0} term")]
    EmptyTerm(IriKind),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        if has_scheme(&value) && !value.chars().any(forbidden_in_iri) {
            Ok(Self(value))
        } else {
            Err(RdfError::InvalidIri(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn has_scheme(s: &str) -> bool {
    let Some((scheme, _)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

fn forbidden_in_iri(c: char) -> bool {
    c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Iri(Iri),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RdfTriple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IriKind {
    Concept,
    Predicate,
    Entity,
}

impl IriKind {
    fn segment(self) -> &'static str {
        match self {
            IriKind::Concept => "concept/",
            IriKind::Predicate => "predicate/",
            IriKind::Entity => "entity/",
        }
    }
}

impl fmt::Display for IriKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.segment().trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MintingPolicy {
    base: Iri,
    pub object_as_literal: bool,
}

impl MintingPolicy {
    /// A missing trailing slash on `base` is added.
    pub fn new(base: &str, object_as_literal: bool) -> Result<Self, RdfError> {
        let base = if base.ends_with('/') {
            base.to_string()
        } else {
            format!("{base}/")
        };
        Ok(Self {
            base: Iri::new(base)?,
            object_as_literal,
        })
    }

    pub fn base(&self) -> &Iri {
        &self.base
    }
}

impl Default for MintingPolicy {
    fn default() -> Self {
        Self::new(DEFAULT_BASE, false).expect("default base is a valid IRI")
    }
}

/// Lowercase, whitespace runs to `-`, everything outside `[a-z0-9._~-]`
/// percent-encoded as UTF-8 octets.
pub fn slug(term: &str) -> String {
    let joined = term
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("-");
    let mut out = String::with_capacity(joined.len());
    for b in joined.bytes() {
        if b.is_ascii_lowercase() || b.is_ascii_digit() || matches!(b, b'.' | b'_' | b'~' | b'-') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn mint_iri(p: &MintingPolicy, kind: IriKind, term: &str) -> Result<Iri, RdfError> {
    if term.trim().is_empty() {
        return Err(RdfError::EmptyTerm(kind));
    }
    Ok(Iri(format!("{}{}{}", p.base, kind.segment(), slug(term))))
}

/// One triple per statement, in order.
pub fn statements_to_triples<'a>(
    statements: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    p: &MintingPolicy,
) -> Result<Vec<RdfTriple>, RdfError> {
    statements
        .into_iter()
        .map(|(s, pr, o)| {
            let object = if p.object_as_literal {
                Object::Literal(o.to_string())
            } else {
                Object::Iri(mint_iri(p, IriKind::Entity, o)?)
            };
            Ok(RdfTriple {
                subject: mint_iri(p, IriKind::Concept, s)?,
                predicate: mint_iri(p, IriKind::Predicate, pr)?,
                object,
            })
        })
        .collect()
}

pub fn to_triples(lt: &LatentTable, p: &MintingPolicy) -> Result<Vec<RdfTriple>, RdfError> {
    statements_to_triples(lt.triples(), p)
}

/// Distinct terms that mint to the same IRI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlugCollision {
    pub iri: Iri,
    pub terms: Vec<String>,
}

pub fn slug_collisions<'a>(
    statements: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    p: &MintingPolicy,
) -> Vec<SlugCollision> {
    let mut seen: BTreeMap<Iri, Vec<&str>> = BTreeMap::new();
    for (s, pr, o) in statements {
        let mut positions = vec![(IriKind::Concept, s), (IriKind::Predicate, pr)];
        if !p.object_as_literal {
            positions.push((IriKind::Entity, o));
        }
        for (kind, term) in positions {
            if let Ok(iri) = mint_iri(p, kind, term) {
                let terms = seen.entry(iri).or_default();
                if !terms.contains(&term) {
                    terms.push(term);
                }
            }
        }
    }
    seen.into_iter()
        .filter(|(_, t)| t.len() > 1)
        .map(|(iri, t)| SlugCollision {
            iri,
            terms: t.into_iter().map(str::to_string).collect(),
        })
        .collect()
}

fn escape_literal(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
}

pub fn format_triple(t: &RdfTriple) -> String {
    let mut line = format!("<{}> <{}> ", t.subject, t.predicate);
    match &t.object {
        Object::Iri(i) => {
            line.push('<');
            line.push_str(i.as_str());
            line.push('>');
        }
        Object::Literal(l) => {
            line.push('"');
            escape_literal(l, &mut line);
            line.push('"');
        }
    }
    line.push_str(" .\n");
    line
}

pub fn write_ntriples<W: Write>(triples: &[RdfTriple], mut sink: W) -> std::io::Result<()> {
    for t in triples {
        sink.write_all(format_triple(t).as_bytes())?;
    }
    Ok(())
}

pub fn serialize_ntriples(triples: &[RdfTriple]) -> Vec<u8> {
    triples.iter().flat_map(|t| format_triple(t).into_bytes()).collect()
}

/// Parses the IRI/plain-literal subset written by [`serialize_ntriples`].
/// Blank lines and `#` comment lines are skipped.
pub fn parse_ntriples(source: &[u8]) -> Result<Vec<RdfTriple>, RdfError> {
    let text = std::str::from_utf8(source).map_err(|e| RdfError::Parse {
        line: 1 + source[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "invalid UTF-8".to_string(),
    })?;
    let mut out = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = line.trim_matches([' ', '\t']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let triple = LineParser { rest: trimmed }
            .triple()
            .map_err(|message| RdfError::Parse {
                line: i + 1,
                message,
            })?;
        out.push(triple);
    }
    Ok(out)
}

struct LineParser<'a> {
    rest: &'a str,
}

impl LineParser<'_> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn iri(&mut self, position: &str) -> Result<Iri, String> {
        self.skip_ws();
        let body = self
            .rest
            .strip_prefix('<')
            .ok_or_else(|| format!("expected IRI in {position} position"))?;
        let end = body
            .find('>')
            .ok_or_else(|| format!("unterminated IRI in {position} position"))?;
        self.rest = &body[end + 1..];
        Iri::new(&body[..end]).map_err(|e| e.to_string())
    }

    fn literal(&mut self) -> Result<String, String> {
        let mut chars = self.rest[1..].char_indices();
        let mut value = String::new();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.rest = &self.rest[1 + i + 1..];
                    if self.rest.starts_with(['^', '@']) {
                        return Err("typed and language-tagged literals are not supported".into());
                    }
                    return Ok(value);
                }
                '\\' => {
                    let (_, e) = chars.next().ok_or("dangling escape in literal")?;
                    match e {
                        '\\' => value.push('\\'),
                        '"' => value.push('"'),
                        '\'' => value.push('\''),
                        'n' => value.push('\n'),
                        'r' => value.push('\r'),
                        't' => value.push('\t'),
                        'b' => value.push('\u{8}'),
                        'f' => value.push('\u{c}'),
                        'u' | 'U' => {
                            let width = if e == 'u' { 4 } else { 8 };
                            let hex: String = chars.by_ref().take(width).map(|(_, h)| h).collect();
                            let code = (hex.len() == width)
                                .then(|| u32::from_str_radix(&hex, 16).ok())
                                .flatten()
                                .and_then(char::from_u32)
                                .ok_or_else(|| format!("bad \\{e} escape"))?;
                            value.push(code);
                        }
                        other => return Err(format!("unknown escape \\{other}")),
                    }
                }
                '\n' | '\r' => return Err("raw line break in literal".into()),
                c => value.push(c),
            }
        }
        Err("unterminated literal".into())
    }

    fn triple(mut self) -> Result<RdfTriple, String> {
        let subject = self.iri("subject")?;
        let predicate = self.iri("predicate")?;
        self.skip_ws();
        let object = if self.rest.starts_with('<') {
            Object::Iri(self.iri("object")?)
        } else if self.rest.starts_with('"') {
            Object::Literal(self.literal()?)
        } else if self.rest.starts_with("_:") {
            return Err("blank nodes are not supported".into());
        } else {
            return Err("expected IRI or literal in object position".into());
        };
        self.skip_ws();
        let after = self
            .rest
            .strip_prefix('.')
            .ok_or("missing terminating '.'")?;
        let after = after.trim_start_matches([' ', '\t']);
        if !after.is_empty() && !after.starts_with('#') {
            return Err(format!("unexpected trailing text {after:?}"));
        }
        Ok(RdfTriple {
            subject,
            predicate,
            object,
        })
    }
}
