//! TF-IDF unigram features with one-vs-rest linear SVMs trained by
//! Pegasos-style stochastic subgradient descent on the hinge loss.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, token_counts, ClassifyError, Prediction, StyleClassifier};
use crate::corpus::Sample;
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// L2 regularization strength (lambda).
    pub reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { reg: 1e-4, epochs: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub model_id: String,
    pub params: SvmParams,
    /// Column order; sorted.
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
    /// Sorted class labels.
    pub classes: Vec<String>,
    /// One weight vector per class, in `classes` order.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Sparse L2-normalized TF-IDF vector.
type SparseVec = Vec<(usize, f64)>;

fn vectorize(text: &str, index: &HashMap<String, usize>, idf: &[f64]) -> SparseVec {
    let mut v: SparseVec = token_counts(text)
        .into_iter()
        .filter_map(|(w, c)| index.get(&w).map(|&i| (i, c as f64 * idf[i])))
        .collect();
    v.sort_by_key(|e| e.0);
    let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut v {
            e.1 /= norm;
        }
    }
    v
}

/// Trains one binary classifier per class. The bias is learned as the weight
/// of a constant feature and is regularized with the rest.
fn pegasos(xs: &[SparseVec], ys: &[f64], dim: usize, params: &SvmParams) -> (Vec<f64>, f64) {
    // w = scale * v, which makes the shrink step O(1).
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0f64;
    let mut t = 0u64;
    for epoch in 0..params.epochs {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        SplitMix64::new(derive_seed(params.seed, &format!("epoch-{epoch}"))).shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.reg * t as f64);
            let margin = ys[i] * scale * (xs[i].iter().map(|&(j, x)| v[j] * x).sum::<f64>() + v[dim]);
            if t == 1 {
                v.iter_mut().for_each(|x| *x = 0.0);
                scale = 1.0;
            } else {
                scale *= 1.0 - 1.0 / t as f64;
            }
            if margin < 1.0 {
                let step = eta * ys[i] / scale;
                for &(j, x) in &xs[i] {
                    v[j] += step * x;
                }
                v[dim] += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
    }
    let bias = v[dim] * scale;
    v.truncate(dim);
    v.iter_mut().for_each(|x| *x *= scale);
    (v, bias)
}

pub fn train_svm(train: &[&Sample], params: SvmParams) -> Result<TfidfModel, ClassifyError> {
    if !(params.reg > 0.0 && params.reg.is_finite()) {
        return Err(ClassifyError::InvalidParameter(format!("reg must be positive, got {}", params.reg)));
    }
    if params.epochs == 0 {
        return Err(ClassifyError::InvalidParameter("epochs must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(ClassifyError::NoSamples);
    }
    let classes: Vec<String> = train.iter().map(|s| s.class_label.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClass);
    }

    let counts: Vec<BTreeMap<String, usize>> = train.iter().map(|s| token_counts(&s.text)).collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &counts {
        for w in c.keys() {
            *df.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    let n = train.len() as f64;
    let vocabulary: Vec<String> = df.keys().map(|w| w.to_string()).collect();
    let idf: Vec<f64> = df.values().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
    let index: HashMap<String, usize> = vocabulary.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();

    let xs: Vec<SparseVec> = train.iter().map(|s| vectorize(&s.text, &index, &idf)).collect();
    let fitted: Vec<(Vec<f64>, f64)> = classes
        .par_iter()
        .map(|c| {
            let ys: Vec<f64> = train.iter().map(|s| if s.class_label == *c { 1.0 } else { -1.0 }).collect();
            pegasos(&xs, &ys, vocabulary.len(), &params)
        })
        .collect();
    let (weights, biases) = fitted.into_iter().unzip();
    Ok(TfidfModel { model_id: "tfidf_svm".into(), params, vocabulary, idf, classes, weights, biases, index })
}

impl TfidfModel {
    pub fn rebuild_index(&mut self) {
        self.index = self.vocabulary.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    }

    pub fn scores(&self, text: &str) -> Vec<f64> {
        let x = vectorize(text, &self.index, &self.idf);
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| x.iter().map(|&(j, v)| w[j] * v).sum::<f64>() + b)
            .collect()
    }

    pub fn predict_text(&self, text: &str) -> Prediction {
        if vectorize(text, &self.index, &self.idf).is_empty() {
            return Prediction { label: self.classes[0].clone(), degenerate: true };
        }
        Prediction { label: self.classes[argmax(&self.scores(text))].clone(), degenerate: false }
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().map(|x| x * x).sum::<f64>() + b * b)
            .sum::<f64>()
            .sqrt()
    }
}

impl StyleClassifier for TfidfModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, _sample_id: &str, text: &str) -> Prediction {
        self.predict_text(text)
    }
}
