//! Confusion matrices and scapegoat concentration.

use std::collections::BTreeMap;

use serde::Serialize;

use super::AnalysisError;
use crate::classify::{Predicted, PredictionRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    /// Row and column labels, sorted.
    pub labels: Vec<String>,
    /// `counts[true][predicted]` over in-set predictions.
    pub counts: Vec<Vec<usize>>,
    /// Out-of-set predictions per true label.
    pub out_of_set: Vec<usize>,
    /// Every out-of-set string and how often it was produced.
    pub out_of_set_strings: BTreeMap<String, usize>,
}

impl ConfusionMatrix {
    /// Row percentages over in-set predictions only; out-of-set labels are
    /// ignored. Rows with no in-set predictions are all zero.
    pub fn in_set_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                row.iter().map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 }).collect()
            })
            .collect()
    }

    /// Row percentages over all predictions, with the out-of-set share as a
    /// final column.
    pub fn full_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .zip(&self.out_of_set)
            .map(|(row, &oos)| {
                let total = row.iter().sum::<usize>() + oos;
                row.iter()
                    .chain(std::iter::once(&oos))
                    .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }
}

/// Builds the true × predicted matrix over `classes` (plus any true label
/// not listed there).
pub fn confusion_matrix(preds: &[PredictionRecord], classes: &[String]) -> ConfusionMatrix {
    let mut labels: Vec<String> = classes.to_vec();
    labels.extend(preds.iter().map(|p| p.true_label.clone()));
    labels.sort();
    labels.dedup();
    let idx = |l: &str| labels.binary_search_by(|x| x.as_str().cmp(l)).ok();
    let mut counts = vec![vec![0; labels.len()]; labels.len()];
    let mut out_of_set = vec![0; labels.len()];
    let mut out_of_set_strings = BTreeMap::new();
    for p in preds {
        let t = idx(&p.true_label).expect("true labels are included");
        match &p.predicted {
            Predicted::Class(c) => match idx(c) {
                Some(j) => counts[t][j] += 1,
                None => {
                    out_of_set[t] += 1;
                    *out_of_set_strings.entry(c.clone()).or_insert(0) += 1;
                }
            },
            Predicted::OutOfSet(s) => {
                out_of_set[t] += 1;
                *out_of_set_strings.entry(s.clone()).or_insert(0) += 1;
            }
        }
    }
    ConfusionMatrix { labels, counts, out_of_set, out_of_set_strings }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScapegoatShares {
    /// Classes receiving misattributions, by count descending then label.
    pub ranking: Vec<(String, usize)>,
    pub total_misattributions: usize,
    /// Cumulative percentage of misattributions held by the top n classes,
    /// for n = 1..=top_n.
    pub cumulative: Vec<f64>,
}

/// Misattributions are wrong in-set predictions; out-of-set answers are not
/// attributed to any class and are left out.
pub fn scapegoat_shares(preds: &[PredictionRecord], top_n: usize) -> Result<ScapegoatShares, AnalysisError> {
    let mut received: BTreeMap<&str, usize> = BTreeMap::new();
    for p in preds {
        if let Some(c) = p.predicted.in_set() {
            if c != p.true_label {
                *received.entry(c).or_insert(0) += 1;
            }
        }
    }
    let total: usize = received.values().sum();
    if total == 0 {
        return Err(AnalysisError::NoMisattributions);
    }
    let mut ranking: Vec<(String, usize)> = received.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    ranking.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut acc = 0;
    let cumulative = (0..top_n)
        .map(|i| {
            acc += ranking.get(i).map_or(0, |r| r.1);
            if acc == total {
                100.0
            } else {
                100.0 * acc as f64 / total as f64
            }
        })
        .collect();
    Ok(ScapegoatShares { ranking, total_misattributions: total, cumulative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::test_support::record;
    use proptest::prelude::*;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_is_identity() {
        let p: Vec<_> = (0..9).map(|i| ["A", "B", "C"][i % 3]).enumerate().map(|(i, l)| record(i, l, l, false)).collect();
        let m = confusion_matrix(&p, &labels(&["A", "B", "C"]));
        for (i, row) in m.in_set_percentages().iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x, if i == j { 100.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn hand_built_three_class() {
        // A: 2→A 1→B 1→C ; B: 3→B 1→A ; C: 1→C 1→OOS
        let mut p = vec![
            record(0, "A", "A", false),
            record(1, "A", "A", false),
            record(2, "A", "B", false),
            record(3, "A", "C", false),
            record(4, "B", "B", false),
            record(5, "B", "B", false),
            record(6, "B", "B", false),
            record(7, "B", "A", false),
            record(8, "C", "C", false),
            record(9, "C", "C", false),
        ];
        p[9].predicted = Predicted::OutOfSet("Sci-Fi".into());
        let m = confusion_matrix(&p, &labels(&["A", "B", "C"]));
        assert_eq!(m.counts, vec![vec![2, 1, 1], vec![1, 3, 0], vec![0, 0, 1]]);
        assert_eq!(m.out_of_set, vec![0, 0, 1]);
        assert_eq!(m.in_set_percentages(), vec![vec![50.0, 25.0, 25.0], vec![25.0, 75.0, 0.0], vec![0.0, 0.0, 100.0]]);
        assert_eq!(m.full_percentages()[2], vec![0.0, 0.0, 50.0, 50.0]);
        assert_eq!(m.out_of_set_strings["Sci-Fi"], 1);
    }

    #[test]
    fn scapegoat_single_target() {
        let p: Vec<_> = (0..6).map(|i| record(i, ["A", "B", "C"][i % 3], "X", false)).collect();
        let s = scapegoat_shares(&p, 3).unwrap();
        assert_eq!(s.cumulative, vec![100.0, 100.0, 100.0]);
    }

    #[test]
    fn scapegoat_thirty_thirty_thirty() {
        let mut p = Vec::new();
        for (label, n) in [("A", 30), ("B", 30), ("C", 30), ("D", 5), ("E", 5)] {
            for _ in 0..n {
                p.push(record(p.len(), "Z", label, false));
            }
        }
        let s = scapegoat_shares(&p, 5).unwrap();
        assert!((s.cumulative[2] - 90.0).abs() < 1e-12);
        assert_eq!(s.ranking[0], ("A".to_string(), 30));
        assert_eq!(s.cumulative[4], 100.0);
        assert_eq!(scapegoat_shares(&p[..0], 1), Err(AnalysisError::NoMisattributions));
    }

    proptest! {
        #[test]
        fn scapegoat_monotone(pairs in proptest::collection::vec((0u8..6, 0u8..6), 1..200)) {
            let p: Vec<_> = pairs.iter().enumerate()
                .map(|(i, (t, q))| record(i, &format!("c{t}"), &format!("c{q}"), false)).collect();
            if let Ok(s) = scapegoat_shares(&p, 8) {
                prop_assert!(s.cumulative.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(s.cumulative.iter().all(|&x| x <= 100.0));
                prop_assert_eq!(s.cumulative[s.ranking.len() - 1], 100.0);
            }
        }
    }
}
