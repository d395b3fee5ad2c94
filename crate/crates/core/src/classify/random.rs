//! Uniform random baseline.

use super::{Prediction, StyleClassifier};
use crate::rng::{derive_seed, SplitMix64};

/// Uniform draw from `classes`, seeded per sample so the result does not
/// depend on evaluation order. Panics on an empty class set.
pub fn random_predict(sample_id: &str, classes: &[String], seed: u64) -> String {
    assert!(!classes.is_empty(), "random baseline needs at least one class");
    let mut rng = SplitMix64::new(derive_seed(seed, sample_id));
    classes[rng.below_usize(classes.len())].clone()
}

#[derive(Debug, Clone)]
pub struct RandomBaseline {
    classes: Vec<String>,
    seed: u64,
}

impl RandomBaseline {
    pub fn new(classes: &[String], seed: u64) -> Self {
        let mut classes = classes.to_vec();
        classes.sort();
        classes.dedup();
        assert!(!classes.is_empty(), "random baseline needs at least one class");
        RandomBaseline { classes, seed }
    }
}

impl StyleClassifier for RandomBaseline {
    fn model_id(&self) -> &str {
        "random"
    }

    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, sample_id: &str, _text: &str) -> Prediction {
        Prediction { label: random_predict(sample_id, &self.classes, self.seed), degenerate: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_over_27_classes() {
        let classes: Vec<String> = (0..27).map(|i| format!("author{i:02}")).collect();
        let mut counts = vec![0usize; 27];
        for i in 0..50_000 {
            let l = random_predict(&format!("x:{i:06}"), &classes, 99);
            counts[classes.iter().position(|c| *c == l).unwrap()] += 1;
        }
        for c in counts {
            let pct = 100.0 * c as f64 / 50_000.0;
            assert!((pct - 100.0 / 27.0).abs() <= 0.5, "{pct}");
        }
    }

    #[test]
    fn single_class_and_reproducibility() {
        let one = vec!["only".to_string()];
        assert_eq!(random_predict("a", &one, 5), "only");
        let classes: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        let a: Vec<String> = (0..100).map(|i| random_predict(&i.to_string(), &classes, 7)).collect();
        let b: Vec<String> = (0..100).map(|i| random_predict(&i.to_string(), &classes, 7)).collect();
        assert_eq!(a, b);
    }
}
