//! Built-in style classifiers (cosine delta, TF-IDF linear SVM, random
//! baseline) and the prediction record shared with external models.

mod delta;
mod random;
mod svm;

pub use delta::{build_delta_profiles, ClassProfile, DeltaModel, DEFAULT_MFW};
pub use random::{random_predict, RandomBaseline};
pub use svm::{train_svm, SvmParams, TfidfModel};

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("class {0:?} has no training samples")]
    EmptyClass(String),
    #[error("training data has a single class; need at least 2")]
    SingleClass,
    #[error("no training samples")]
    NoSamples,
    #[error("sample label {0:?} is not in the class set")]
    UnknownLabel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model file: {0}")]
    Model(#[from] serde_json::Error),
}

/// Sentinel written for predictions outside the task's class set.
pub const OUT_OF_SET: &str = "OUT_OF_SET";

/// Lowercased maximal alphanumeric runs.
pub fn word_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

pub(crate) fn token_counts(text: &str) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for w in word_tokens(text) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub label: String,
    /// Set when the input carried no usable features and the label is the
    /// lexicographically first class by convention.
    pub degenerate: bool,
}

/// A trained classifier that labels single texts.
pub trait StyleClassifier: Sync {
    fn model_id(&self) -> &str;
    /// Class labels in lexicographic order.
    fn classes(&self) -> &[String];
    fn predict(&self, sample_id: &str, text: &str) -> Prediction;
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicted {
    Class(String),
    /// A label outside the class set; the original string is kept.
    OutOfSet(String),
}

impl Predicted {
    pub fn classify(raw: &str, classes: &[String]) -> Self {
        if classes.iter().any(|c| c == raw) {
            Predicted::Class(raw.to_string())
        } else {
            Predicted::OutOfSet(raw.to_string())
        }
    }

    pub fn raw(&self) -> &str {
        match self {
            Predicted::Class(s) | Predicted::OutOfSet(s) => s,
        }
    }

    pub fn in_set(&self) -> Option<&str> {
        match self {
            Predicted::Class(s) => Some(s),
            Predicted::OutOfSet(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub model_id: String,
    pub variant_id: String,
    pub predicted: Predicted,
    pub true_label: String,
    pub from_withheld_novel: bool,
}

impl PredictionRecord {
    pub fn is_correct(&self) -> bool {
        self.predicted.in_set() == Some(self.true_label.as_str())
    }
}

/// `sample_id TAB model_id TAB variant_id TAB predicted TAB true TAB withheld`.
/// Out-of-set predictions are written with their original string.
pub fn write_predictions<W: Write>(mut w: W, records: &[PredictionRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.sample_id,
            r.model_id,
            r.variant_id,
            r.predicted.raw(),
            r.true_label,
            r.from_withheld_novel
        )?;
    }
    Ok(())
}

/// Serialized form of a built-in model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum SavedModel {
    CosineDelta(DeltaModel),
    TfidfSvm(TfidfModel),
}

impl SavedModel {
    pub const VERSION: u32 = 1;

    pub fn to_json(&self) -> Result<String, ClassifyError> {
        let mut v = serde_json::to_value(self)?;
        v["version"] = Self::VERSION.into();
        Ok(serde_json::to_string(&v)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ClassifyError> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        match v.get("version").and_then(|x| x.as_u64()) {
            Some(1) => {}
            other => {
                return Err(ClassifyError::InvalidParameter(format!("unsupported model version {other:?}")));
            }
        }
        let mut m: SavedModel = serde_json::from_value(v)?;
        match &mut m {
            SavedModel::CosineDelta(d) => d.after_load(),
            SavedModel::TfidfSvm(svm) => svm.rebuild_index(),
        }
        Ok(m)
    }

    pub fn classifier(&self) -> &dyn StyleClassifier {
        match self {
            SavedModel::CosineDelta(m) => m,
            SavedModel::TfidfSvm(m) => m,
        }
    }
}

/// Index of the maximum score; ties go to the earliest index (classes are
/// kept sorted, so this is lexicographic tie-breaking).
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
