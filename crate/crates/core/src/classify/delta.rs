//! Cosine delta over z-scored most-frequent-word profiles.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{argmax, token_counts, ClassifyError, Prediction, StyleClassifier};
use crate::corpus::Sample;

pub const DEFAULT_MFW: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub class_label: String,
    pub z_vector: Vec<f64>,
}

/// Fitted cosine-delta model. `means` and `stds` are the per-word statistics
/// of class relative frequencies used to z-score both profiles and inputs; a
/// zero `std` marks a zero-variance word whose z-score is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaModel {
    pub model_id: String,
    pub mfw: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Sorted by class label.
    pub profiles: Vec<ClassProfile>,
    #[serde(skip)]
    labels: Vec<String>,
}

/// Builds class profiles over the `k` most frequent training words.
/// `classes` is the task class set; every class needs a training sample.
pub fn build_delta_profiles(train: &[&Sample], classes: &[String], k: usize) -> Result<DeltaModel, ClassifyError> {
    if k == 0 {
        return Err(ClassifyError::InvalidParameter("k must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(ClassifyError::NoSamples);
    }
    let mut labels: Vec<String> = classes.to_vec();
    labels.sort();
    labels.dedup();
    let class_idx: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let mut class_counts: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); labels.len()];
    let mut class_totals = vec![0usize; labels.len()];
    let mut corpus: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen = vec![false; labels.len()];
    for s in train {
        let ci = *class_idx
            .get(s.class_label.as_str())
            .ok_or_else(|| ClassifyError::UnknownLabel(s.class_label.clone()))?;
        seen[ci] = true;
        for (w, c) in token_counts(&s.text) {
            *corpus.entry(w.clone()).or_insert(0) += c;
            *class_counts[ci].entry(w).or_insert(0) += c;
            class_totals[ci] += c;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(ClassifyError::EmptyClass(labels[i].clone()));
    }

    let mut ranked: Vec<(String, usize)> = corpus.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mfw: Vec<String> = ranked.into_iter().take(k).map(|(w, _)| w).collect();

    let freqs: Vec<Vec<f64>> = (0..labels.len())
        .map(|ci| {
            let total = class_totals[ci].max(1) as f64;
            mfw.iter()
                .map(|w| class_counts[ci].get(w).copied().unwrap_or(0) as f64 / total)
                .collect()
        })
        .collect();

    let n = labels.len();
    let mut means = Vec::with_capacity(mfw.len());
    let mut stds = Vec::with_capacity(mfw.len());
    for d in 0..mfw.len() {
        let col: Vec<f64> = freqs.iter().map(|f| f[d]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let constant = col.iter().all(|&x| x == col[0]);
        let std = if n < 2 || constant {
            0.0
        } else {
            (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        means.push(mean);
        stds.push(std);
    }
    let profiles = labels
        .iter()
        .zip(&freqs)
        .map(|(l, f)| ClassProfile { class_label: l.clone(), z_vector: zscore(f, &means, &stds) })
        .collect();
    Ok(DeltaModel { model_id: "cosine_delta".into(), mfw, means, stds, profiles, labels })
}

fn zscore(freqs: &[f64], means: &[f64], stds: &[f64]) -> Vec<f64> {
    freqs
        .iter()
        .zip(means.iter().zip(stds))
        .map(|(f, (m, s))| if *s > 0.0 { (f - m) / s } else { 0.0 })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl DeltaModel {
    /// Relative frequencies of the profile words in `text`, and whether any
    /// of them occurs.
    pub fn relative_frequencies(&self, text: &str) -> (Vec<f64>, bool) {
        let counts = token_counts(text);
        let total: usize = counts.values().sum();
        let mut any = false;
        let f = self
            .mfw
            .iter()
            .map(|w| match counts.get(w) {
                Some(&c) => {
                    any = true;
                    c as f64 / total as f64
                }
                None => 0.0,
            })
            .collect();
        (f, any)
    }

    pub fn z_scores(&self, text: &str) -> Vec<f64> {
        zscore(&self.relative_frequencies(text).0, &self.means, &self.stds)
    }

    /// Cosine similarity of `text` to each profile, in profile order.
    pub fn similarities(&self, text: &str) -> Vec<f64> {
        let z = self.z_scores(text);
        self.profiles.iter().map(|p| cosine(&z, &p.z_vector)).collect()
    }

    pub fn predict_text(&self, text: &str) -> Prediction {
        let (_, any) = self.relative_frequencies(text);
        if !any {
            return Prediction { label: self.profiles[0].class_label.clone(), degenerate: true };
        }
        let sims = self.similarities(text);
        Prediction { label: self.profiles[argmax(&sims)].class_label.clone(), degenerate: false }
    }

    fn ensure_labels(&mut self) {
        self.labels = self.profiles.iter().map(|p| p.class_label.clone()).collect();
    }

    pub(crate) fn after_load(&mut self) {
        self.ensure_labels();
    }
}

impl StyleClassifier for DeltaModel {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn classes(&self) -> &[String] {
        &self.labels
    }

    fn predict(&self, _sample_id: &str, text: &str) -> Prediction {
        self.predict_text(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    pub(crate) fn sample(id: usize, label: &str, text: String) -> Sample {
        Sample {
            sample_id: format!("s{id}"),
            novel_id: format!("n-{label}"),
            class_label: label.into(),
            word_count: text.split_whitespace().count(),
            text,
            from_withheld_novel: false,
        }
    }

    const BACKGROUND: &[&str] = &["the", "a", "of", "river", "house", "walked", "slowly", "under", "grey", "sky", "and", "to"];

    fn planted(label_idx: usize, rng: &mut SplitMix64) -> String {
        let mut words: Vec<String> = (0..40).map(|_| BACKGROUND[rng.below_usize(BACKGROUND.len())].to_string()).collect();
        for p in [5, 25] {
            words[p] = format!("marker{label_idx}");
        }
        words.join(" ")
    }

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("class{i}")).collect()
    }

    #[test]
    fn identical_classes_give_zero_profiles() {
        let text = "the cat sat on the mat with a hat".to_string();
        let s = [sample(0, "A", text.clone()), sample(1, "B", text)];
        let refs: Vec<&Sample> = s.iter().collect();
        let m = build_delta_profiles(&refs, &["A".into(), "B".into()], 10).unwrap();
        assert!(m.profiles.iter().all(|p| p.z_vector.iter().all(|&z| z == 0.0)));
    }

    #[test]
    fn marker_dimension_is_maximal() {
        let mut rng = SplitMix64::new(4);
        let samples: Vec<Sample> = (0..400).map(|i| sample(i, &format!("class{}", i % 4), planted(i % 4, &mut rng))).collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let m = build_delta_profiles(&refs, &classes(4), 500).unwrap();
        for (ci, p) in m.profiles.iter().enumerate() {
            // brute-force: marker frequency in own class vs others
            let marker = format!("marker{ci}");
            let d = m.mfw.iter().position(|w| *w == marker).unwrap();
            let max = p.z_vector.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(p.z_vector[d], max, "class {ci}");
        }
    }

    #[test]
    fn k_clamps_to_vocabulary() {
        let s = [sample(0, "A", "one two".into()), sample(1, "B", "two three".into())];
        let refs: Vec<&Sample> = s.iter().collect();
        let m = build_delta_profiles(&refs, &["A".into(), "B".into()], 1000).unwrap();
        assert_eq!(m.mfw, vec!["two", "one", "three"]);
    }

    #[test]
    fn empty_class_is_an_error() {
        let s = [sample(0, "A", "one two".into())];
        let refs: Vec<&Sample> = s.iter().collect();
        assert!(matches!(
            build_delta_profiles(&refs, &["A".into(), "B".into()], 10),
            Err(ClassifyError::EmptyClass(c)) if c == "B"
        ));
    }

    #[test]
    fn self_similarity_and_degenerate_input() {
        let texts = ["alpha beta beta gamma", "delta delta epsilon alpha", "zeta eta theta theta"];
        let s: Vec<Sample> = texts.iter().enumerate().map(|(i, t)| sample(i, &format!("C{i}"), t.to_string())).collect();
        let refs: Vec<&Sample> = s.iter().collect();
        let labels: Vec<String> = (0..3).map(|i| format!("C{i}")).collect();
        let m = build_delta_profiles(&refs, &labels, 500).unwrap();
        for (i, t) in texts.iter().enumerate() {
            assert_eq!(m.predict_text(t).label, format!("C{i}"));
        }
        let p = m.predict_text("nothing known here");
        assert_eq!(p, Prediction { label: "C0".into(), degenerate: true });
    }

    #[test]
    fn scale_invariance() {
        let mut rng = SplitMix64::new(9);
        let samples: Vec<Sample> = (0..80).map(|i| sample(i, &format!("class{}", i % 4), planted(i % 4, &mut rng))).collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let m = build_delta_profiles(&refs, &classes(4), 50).unwrap();
        for s in &samples[..20] {
            let doubled = format!("{} {}", s.text, s.text);
            assert_eq!(m.predict_text(&s.text), m.predict_text(&doubled));
        }
    }

    #[test]
    fn profile_statistics() {
        let mut rng = SplitMix64::new(2);
        let samples: Vec<Sample> = (0..60)
            .map(|i| {
                let text: Vec<&str> = (0..25).map(|_| BACKGROUND[rng.below_usize(BACKGROUND.len())]).collect();
                sample(i, &format!("class{}", i % 3), text.join(" "))
            })
            .collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let m = build_delta_profiles(&refs, &classes(3), 500).unwrap();
        for d in 0..m.mfw.len() {
            if m.stds[d] == 0.0 {
                continue;
            }
            let col: Vec<f64> = m.profiles.iter().map(|p| p.z_vector[d]).collect();
            let mean = col.iter().sum::<f64>() / 3.0;
            let sd = (col.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
    }
}
