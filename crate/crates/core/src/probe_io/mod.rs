//! Interchange with external language-model tooling: fine-tune records,
//! prediction/weight/embedding ingestion, generation matching and the
//! Wikipedia page-length client.

mod embeddings;
mod finetune;
mod popularity;
mod predictions;
mod weights;

pub use embeddings::{parse_embeddings, EmbeddingEntry, EmbeddingRecord, EmbeddingSet, EmbeddingTable, AVERAGE_OWNER};
pub use finetune::{emit_finetune_records, parse_finetune_output, write_finetune_jsonl, FinetuneRecord, FinetuneStyle};
pub use popularity::{
    PageSource, PopularityClient, PopularityRecord, PopularitySource, WikipediaSource, MANUAL_FILE, POPULARITY_CACHE_FILE,
};
pub use predictions::{match_generation, parse_predictions, GenerationMatch};
pub use weights::{
    mass_normalize, parse_weight_triples, standardize_groups, NegativePolicy, Standardization, WeightKind, WeightMatrix,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("line {line_no}: unknown sample id {sample_id:?}")]
    UnknownSampleId { line_no: usize, sample_id: String },
    #[error("line {line_no}: negative weight {weight} for {kind} matrix")]
    NegativeWeight { line_no: usize, weight: f64, kind: WeightKind },
    #[error("line {line_no}: duplicate triple ({group}, {token})")]
    DuplicateTriple { line_no: usize, group: String, token: String },
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("group {0:?} has no multiplicity")]
    MissingMultiplicity(String),
    #[error("invalid multiplicity {multiplicity} for group {group:?}")]
    InvalidMultiplicity { group: String, multiplicity: u64 },
    #[error("line {line_no}: vector dimension {found}, expected {expected}")]
    DimensionMismatch { line_no: usize, expected: usize, found: usize },
    #[error("no Wikipedia page for {0:?}")]
    PageNotFound(String),
    #[error("{0:?} is not cached and network access is disabled")]
    NetworkUnavailable(String),
    #[error("network: {0}")]
    Network(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
