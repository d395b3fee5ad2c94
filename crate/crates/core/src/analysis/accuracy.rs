//! Accuracy with bootstrap standard errors.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::classify::PredictionRecord;
use crate::rng::{derive_seed, derive_seed_indexed, SplitMix64};

pub const DEFAULT_BOOTSTRAP_ITERS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyCell {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Standard deviation of the accuracy over bootstrap resamples in which
    /// the cell was non-empty.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub overall: AccuracyCell,
    /// Keyed by true label.
    pub by_class: BTreeMap<String, AccuracyCell>,
    pub in_training: Option<AccuracyCell>,
    pub withheld: Option<AccuracyCell>,
    pub bootstrap_iters: usize,
    /// False when there were too few resamples to estimate a spread; the
    /// reported SEs are then 0.
    pub se_defined: bool,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    n: usize,
    correct: usize,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.n += 1;
        self.correct += ok as usize;
    }

    fn accuracy(self) -> Option<f64> {
        (self.n > 0).then(|| self.correct as f64 / self.n as f64)
    }
}

/// Tallies for overall, each class (by index) and the two withheld groups.
fn tally(preds: &[PredictionRecord], picks: impl Iterator<Item = usize>, class_of: &[usize], n_classes: usize) -> Vec<Tally> {
    let mut t = vec![Tally::default(); 3 + n_classes];
    for i in picks {
        let ok = preds[i].is_correct();
        t[0].add(ok);
        t[if preds[i].from_withheld_novel { 2 } else { 1 }].add(ok);
        t[3 + class_of[i]].add(ok);
    }
    t
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Resamples records with replacement `iters` times. Each iteration draws
/// from its own derived seed, so results do not depend on thread count.
pub fn accuracy_report(preds: &[PredictionRecord], iters: usize, seed: u64) -> Result<AccuracyReport, AnalysisError> {
    if preds.is_empty() {
        return Err(AnalysisError::EmptyPredictions);
    }
    if iters == 0 {
        return Err(AnalysisError::NoIterations);
    }
    let labels: Vec<String> = {
        let mut l: Vec<String> = preds.iter().map(|p| p.true_label.clone()).collect();
        l.sort();
        l.dedup();
        l
    };
    let class_of: Vec<usize> = preds.iter().map(|p| labels.binary_search(&p.true_label).unwrap()).collect();
    let exact = tally(preds, 0..preds.len(), &class_of, labels.len());

    let base = derive_seed(seed, "bootstrap");
    let n = preds.len();
    let resampled: Vec<Vec<Tally>> = (0..iters as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::new(derive_seed_indexed(base, i));
            tally(preds, (0..n).map(|_| rng.below_usize(n)), &class_of, labels.len())
        })
        .collect();
    let se_defined = iters >= 2;
    let cell = |k: usize| -> Option<AccuracyCell> {
        let t = exact[k];
        let accuracy = t.accuracy()?;
        let draws: Vec<f64> = resampled.iter().filter_map(|r| r[k].accuracy()).collect();
        Some(AccuracyCell { n: t.n, correct: t.correct, accuracy, se: sample_std(&draws) })
    };
    Ok(AccuracyReport {
        overall: cell(0).expect("non-empty"),
        by_class: labels.iter().enumerate().map(|(i, l)| (l.clone(), cell(3 + i).expect("label present"))).collect(),
        in_training: cell(1),
        withheld: cell(2),
        bootstrap_iters: iters,
        se_defined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::test_support::record;
    use crate::classify::Predicted;

    fn synthetic(n: usize, correct: usize) -> Vec<PredictionRecord> {
        (0..n).map(|i| record(i, "A", if i < correct { "A" } else { "B" }, i % 3 == 0)).collect()
    }

    #[test]
    fn exact_accuracy() {
        let r = accuracy_report(&synthetic(10, 7), 10, 1).unwrap();
        assert_eq!(r.overall.accuracy, 0.7);
        let (a, b) = (r.in_training.unwrap(), r.withheld.unwrap());
        let weighted = (a.accuracy * a.n as f64 + b.accuracy * b.n as f64) / 10.0;
        assert!((weighted - 0.7).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_matches_binomial_se() {
        let r = accuracy_report(&synthetic(1000, 700), 1000, 42).unwrap();
        let analytic = (0.7f64 * 0.3 / 1000.0).sqrt();
        assert!((r.overall.se - analytic).abs() / analytic < 0.15, "{} vs {analytic}", r.overall.se);
    }

    #[test]
    fn all_correct_has_zero_se() {
        let r = accuracy_report(&synthetic(50, 50), 200, 3).unwrap();
        assert_eq!(r.overall.se, 0.0);
        assert!(r.se_defined);
    }

    #[test]
    fn single_iteration_flags_undefined_se() {
        let r = accuracy_report(&synthetic(50, 20), 1, 3).unwrap();
        assert_eq!(r.overall.se, 0.0);
        assert!(!r.se_defined);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = synthetic(300, 120);
        assert_eq!(accuracy_report(&p, 100, 8).unwrap(), accuracy_report(&p, 100, 8).unwrap());
        assert_eq!(accuracy_report(&[], 10, 0), Err(AnalysisError::EmptyPredictions));
    }

    #[test]
    fn out_of_set_counts_as_wrong() {
        let mut p = synthetic(4, 4);
        p[0].predicted = Predicted::OutOfSet("A ".into());
        assert_eq!(accuracy_report(&p, 5, 0).unwrap().overall.correct, 3);
    }
}
