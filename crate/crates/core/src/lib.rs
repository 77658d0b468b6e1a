//! Latent table discovery.
//!
//! Two relational tables that share no key can still be related through a
//! domain ontology: cells from a column of each table are resolved to
//! ontology concepts (by label or synonym), the concepts are connected by a
//! bounded shortest-path search, and every connected pair becomes a row of a
//! new "latent" table. That table maps positionally onto RDF triples.
//!
//! ```no_run
//! use ltd::{discovery, ontology, tabular};
//!
//! let onto = ontology::load_ontology(std::fs::File::open("body.onto")?)?;
//! let left = tabular::load_table(std::fs::File::open("diagnosis.csv")?, "Diagnosis", b',')?;
//! let right = tabular::load_table(std::fs::File::open("drug.csv")?, "Drug", b',')?;
//! let req = discovery::DiscoveryRequest::new("Intervention", "Chemical Composition")
//!     .with_projection("Name");
//! let latent = discovery::discover(&req, &left, &right, &onto)?;
//! for row in &latent.rows {
//!     println!("{} | {} | {}", row.subject, row.predicate, row.object);
//! }
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod discovery;
pub mod matcher;
pub mod ontology;
pub mod rdf;
pub mod tabular;

pub use discovery::{discover, DiscoveryRequest, LatentRow, LatentTable, PredicateMode};
pub use matcher::{ConceptMatch, Lexicon, MatchKind};
pub use ontology::{ConceptId, Direction, Ontology, SemanticPath};
pub use rdf::{Iri, MintingPolicy, RdfTriple};
pub use tabular::Table;
