//! Per-class vocabulary size and uniqueness on equal-size samples.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::Sample;
use crate::rng::{derive_seed, SplitMix64};

/// Mean inverse class document frequency of a class's word types, × 100.
pub const UNIQUENESS_METRIC: &str = "inverse-class-df-v1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStyleMetrics {
    pub class_label: String,
    pub samples_used: usize,
    pub vocab_size: usize,
    pub uniqueness: f64,
    pub metric_version: &'static str,
}

fn alphabetic_types(text: &str, into: &mut BTreeSet<String>) {
    for w in text.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        into.insert(w.to_lowercase());
    }
}

/// Each class contributes the same number of samples, `min(sample_cap,
/// smallest class)`, drawn from the class's samples in sample-id order.
pub fn class_style_metrics(samples: &[&Sample], sample_cap: usize, seed: u64) -> Vec<ClassStyleMetrics> {
    let mut by_class: BTreeMap<&str, Vec<&Sample>> = BTreeMap::new();
    for s in samples {
        by_class.entry(s.class_label.as_str()).or_default().push(s);
    }
    if by_class.is_empty() {
        return Vec::new();
    }
    let m = by_class.values().map(Vec::len).min().unwrap_or(0).min(sample_cap);
    let types: BTreeMap<&str, BTreeSet<String>> = by_class
        .iter_mut()
        .map(|(label, list)| {
            list.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
            // Keyed on the member ids rather than the label so that renaming
            // classes cannot change which samples are drawn.
            let key: Vec<&str> = list.iter().map(|s| s.sample_id.as_str()).collect();
            let mut rng = SplitMix64::new(derive_seed(seed, &key.join("\n")));
            let mut set = BTreeSet::new();
            for i in rng.sample_indices(list.len(), m) {
                alphabetic_types(&list[i].text, &mut set);
            }
            (*label, set)
        })
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for set in types.values() {
        for w in set {
            *df.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    types
        .iter()
        .map(|(label, set)| ClassStyleMetrics {
            class_label: label.to_string(),
            samples_used: m,
            vocab_size: set.len(),
            uniqueness: if set.is_empty() {
                0.0
            } else {
                100.0 * set.iter().map(|w| 1.0 / df[w.as_str()] as f64).sum::<f64>() / set.len() as f64
            },
            metric_version: UNIQUENESS_METRIC,
        })
        .collect()
}
