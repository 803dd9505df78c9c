//! Documentation suggestions for computational notebooks.
//!
//! Three generators propose a markdown cell for a code cell: a trained
//! graph-augmented summarizer ([`summarizer`]), an API-documentation lookup
//! ([`retriever`]) and output-aware fill-in prompts ([`prompt`]).
//! [`suggest::Suggester`] runs all three; [`provenance`] scores how much of
//! an accepted suggestion survived the user's edits.

pub mod code;
pub mod corpus;
pub mod notebook;
pub mod prompt;
pub mod provenance;
pub mod retriever;
pub mod suggest;
pub mod summarizer;

pub use notebook::{parse_notebook, serialize_notebook, Cell, CellKind, CellOutput, NotebookDocument, NotebookError, OutputKind, Placement};
pub use provenance::{classify_provenance, Provenance, ProvenanceTag, Thresholds};
pub use retriever::{query_candidate, KnowledgeBase};
pub use suggest::{OutputInfo, SuggestResponse, Suggester, SuggestionCandidate, SuggestionKind};
