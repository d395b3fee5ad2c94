//! Statistics over predictions, weight matrices and embeddings.

mod accuracy;
mod confusion;
mod embsim;
mod fightin;
pub mod report;
mod stats;
mod style;

pub use accuracy::{accuracy_report, AccuracyCell, AccuracyReport, DEFAULT_BOOTSTRAP_ITERS};
pub use confusion::{confusion_matrix, scapegoat_shares, ConfusionMatrix, ScapegoatShares};
pub use embsim::{build_average_table, embedding_similarity_scores, EmbeddingSimilarityScores};
pub use fightin::{fightin_words, one_vs_rest_fightin, FightinToken, FightinWordsResult, PriorKind};
pub use stats::{pearson, Correlation};
pub use style::{class_style_metrics, ClassStyleMetrics, UNIQUENESS_METRIC};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no predictions")]
    EmptyPredictions,
    #[error("bootstrap needs at least one iteration")]
    NoIterations,
    #[error("no misattributions to rank")]
    NoMisattributions,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("alpha0 must be positive, got {0}")]
    NonpositiveAlpha(f64),
    #[error("{owner}: vector dimension {found}, expected {expected}")]
    DimensionMismatch { owner: String, expected: usize, found: usize },
    #[error("class {0:?} has no samples")]
    EmptyClass(String),
}
