//! Externally produced predictions and free-text generation matching.

use std::collections::HashSet;

use super::ProbeError;
use crate::classify::{Predicted, PredictionRecord};
use crate::corpus::parse_bool;

/// Parses the six-field prediction line format. Labels outside `classes`
/// are kept as out-of-set with their original string. When `known` is given,
/// every sample id must be in it.
pub fn parse_predictions(
    input: &str,
    classes: &[String],
    known: Option<&HashSet<String>>,
) -> Result<Vec<PredictionRecord>, ProbeError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| ProbeError::MalformedLine { line_no, reason };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 tab-separated fields, found {}", f.len())));
        }
        if f[..3].iter().any(|x| x.is_empty()) || f[4].is_empty() {
            return Err(bad("empty sample, model, variant or true label".into()));
        }
        let withheld = parse_bool(f[5]).ok_or_else(|| bad(format!("withheld flag {:?} is not true/false", f[5])))?;
        if let Some(known) = known {
            if !known.contains(f[0]) {
                return Err(ProbeError::UnknownSampleId { line_no, sample_id: f[0].to_string() });
            }
        }
        out.push(PredictionRecord {
            sample_id: f[0].to_string(),
            model_id: f[1].to_string(),
            variant_id: f[2].to_string(),
            predicted: Predicted::classify(f[3], classes),
            true_label: f[4].to_string(),
            from_withheld_novel: withheld,
        });
    }
    Ok(out)
}

/// Strict and lenient agreement between a free-text generation and a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenerationMatch {
    /// Every word of the label, in order, appears contiguously.
    pub full: bool,
    /// The label's last word appears as a word.
    pub surname: bool,
}

fn words(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn match_generation(generation: &str, target: &str) -> GenerationMatch {
    let g = words(generation);
    let t = words(target);
    if t.is_empty() {
        return GenerationMatch::default();
    }
    let full = g.windows(t.len()).any(|w| w == t.as_slice());
    let last = &t[t.len() - 1];
    GenerationMatch { full, surname: g.iter().any(|w| w == last) }
}
