//! Agreement between class-level embedding dictionaries.

use std::collections::BTreeMap;

use serde::Serialize;

use super::AnalysisError;
use crate::probe_io::{EmbeddingTable, AVERAGE_OWNER};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingSimilarityScores {
    pub class_label: String,
    /// Mean over the whole training vocabulary of cos(class, average); words
    /// the class never used add 0.
    pub train_vs_average: f64,
    /// Mean over the class's test excerpts of the per-excerpt mean of
    /// cos(excerpt, class) across the excerpt's words; words missing from the
    /// class table add 0. `None` without test excerpts.
    pub test_vs_train: Option<f64>,
    pub test_excerpts: usize,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>();
    let nb = b.iter().map(|x| x * x).sum::<f64>();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        // One square root keeps cos(v, v) exactly 1.
        (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
    }
}

fn check_dim(t: &EmbeddingTable, dim: usize) -> Result<(), AnalysisError> {
    if t.dim != dim || t.words.values().any(|e| e.vector.len() != dim) {
        let found = t.words.values().map(|e| e.vector.len()).find(|&l| l != dim).unwrap_or(t.dim);
        return Err(AnalysisError::DimensionMismatch { owner: t.owner.clone(), expected: dim, found });
    }
    Ok(())
}

/// Per word, the unweighted mean of the vectors of every class that used
/// it. Support counts the contributing classes.
pub fn build_average_table(classes: &[&EmbeddingTable]) -> Result<EmbeddingTable, AnalysisError> {
    let first = classes.first().ok_or_else(|| AnalysisError::DegenerateInput("no class tables".into()))?;
    let dim = first.dim;
    let mut sums: BTreeMap<&str, (Vec<f64>, u64)> = BTreeMap::new();
    for t in classes {
        check_dim(t, dim)?;
        for (w, e) in &t.words {
            let entry = sums.entry(w.as_str()).or_insert_with(|| (vec![0.0; dim], 0));
            entry.0.iter_mut().zip(&e.vector).for_each(|(s, x)| *s += x);
            entry.1 += 1;
        }
    }
    let mut avg = EmbeddingTable::new(AVERAGE_OWNER, dim);
    for (w, (sum, k)) in sums {
        avg.words.insert(
            w.to_string(),
            crate::probe_io::EmbeddingEntry { vector: sum.iter().map(|s| s / k as f64).collect(), support: k },
        );
    }
    Ok(avg)
}

/// Scores every class table against the average table and, where
/// available, against the class's own test excerpts. The training
/// vocabulary is the average table's word set.
pub fn embedding_similarity_scores(
    classes: &[&EmbeddingTable],
    average: &EmbeddingTable,
    excerpts: &BTreeMap<&str, Vec<&EmbeddingTable>>,
) -> Result<Vec<EmbeddingSimilarityScores>, AnalysisError> {
    let dim = average.dim;
    check_dim(average, dim)?;
    let vocab = average.words.len();
    let mut out = Vec::with_capacity(classes.len());
    for c in classes {
        check_dim(c, dim)?;
        let train_vs_average = if vocab == 0 {
            0.0
        } else {
            average.words.iter().filter_map(|(w, a)| c.get(w).map(|v| cosine(v, &a.vector))).sum::<f64>() / vocab as f64
        };
        let tests = excerpts.get(c.owner.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let mut per_excerpt = Vec::with_capacity(tests.len());
        for e in tests {
            check_dim(e, dim)?;
            if e.is_empty() {
                continue;
            }
            let s: f64 = e.words.iter().filter_map(|(w, x)| c.get(w).map(|v| cosine(&x.vector, v))).sum();
            per_excerpt.push(s / e.len() as f64);
        }
        out.push(EmbeddingSimilarityScores {
            class_label: c.owner.clone(),
            train_vs_average,
            test_vs_train: (!per_excerpt.is_empty()).then(|| per_excerpt.iter().sum::<f64>() / per_excerpt.len() as f64),
            test_excerpts: per_excerpt.len(),
        });
    }
    Ok(out)
}
