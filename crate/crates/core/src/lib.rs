//! Stylometric experimentation toolkit.
//!
//! The crate covers the CPU side of a literary-style study: building
//! sentence-level corpora from novels, reproducible train/validation/test
//! splits with withheld novels, text ablations (casing, punctuation,
//! stop-word and proper-noun masking, shuffling), two classical style
//! classifiers plus a random baseline, interchange formats for externally
//! produced model outputs, and the statistics used to analyse them.

pub mod analysis;
pub mod classify;
pub mod corpus;
pub mod perturb;
pub mod probe_io;
pub mod rng;
pub mod splitter;

use serde::{Deserialize, Serialize};

/// Which label a corpus carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Authorship,
    Genre,
}

impl Task {
    /// Field name used in fine-tuning records.
    pub fn field_name(self) -> &'static str {
        match self {
            Task::Authorship => "AUTHOR",
            Task::Genre => "GENRE",
        }
    }

    /// Qualifying sentences a training novel needs to be kept.
    pub fn min_samples_per_novel(self) -> usize {
        match self {
            Task::Authorship => 675,
            Task::Genre => 400,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Authorship => "authorship",
            Task::Genre => "genre",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "authorship" | "author" => Ok(Task::Authorship),
            "genre" => Ok(Task::Genre),
            other => Err(format!("unknown task {other:?} (expected authorship or genre)")),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
