//! Word-level contextual embedding dictionaries, one per class (and per
//! test excerpt), read from JSON lines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ProbeError;

/// Owner label of the cross-class average table.
pub const AVERAGE_OWNER: &str = "AVERAGE";

/// One input line. Records with an `excerpt` id describe a single test
/// excerpt rather than a class's training usage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub owner: String,
    pub word: String,
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excerpt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingEntry {
    pub vector: Vec<f64>,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub owner: String,
    pub dim: usize,
    pub words: BTreeMap<String, EmbeddingEntry>,
}

impl EmbeddingTable {
    pub fn new(owner: impl Into<String>, dim: usize) -> Self {
        EmbeddingTable { owner: owner.into(), dim, words: BTreeMap::new() }
    }

    /// Folds `vector` into the running mean for `word`. The caller checks
    /// the dimension.
    pub fn insert(&mut self, word: &str, vector: &[f64]) {
        debug_assert_eq!(vector.len(), self.dim);
        match self.words.get_mut(word) {
            Some(e) => {
                e.support += 1;
                let n = e.support as f64;
                for (m, x) in e.vector.iter_mut().zip(vector) {
                    *m += (x - *m) / n;
                }
            }
            None => {
                self.words.insert(word.to_string(), EmbeddingEntry { vector: vector.to_vec(), support: 1 });
            }
        }
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.words.get(word).map(|e| e.vector.as_slice())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Everything read from one embeddings file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingSet {
    pub dim: Option<usize>,
    /// Class-level training tables by owner.
    pub classes: BTreeMap<String, EmbeddingTable>,
    /// Test excerpt tables by excerpt id; the table owner is the excerpt's
    /// true class.
    pub excerpts: BTreeMap<String, EmbeddingTable>,
}

impl EmbeddingSet {
    /// Excerpt tables grouped by owner class.
    pub fn excerpts_by_owner(&self) -> BTreeMap<&str, Vec<&EmbeddingTable>> {
        let mut out: BTreeMap<&str, Vec<&EmbeddingTable>> = BTreeMap::new();
        for t in self.excerpts.values() {
            out.entry(t.owner.as_str()).or_default().push(t);
        }
        out
    }
}

pub fn parse_embeddings(input: &str) -> Result<EmbeddingSet, ProbeError> {
    let mut set = EmbeddingSet::default();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| ProbeError::MalformedLine { line_no, reason };
        let r: EmbeddingRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if r.owner.is_empty() || r.word.is_empty() {
            return Err(bad("empty owner or word".into()));
        }
        if r.vector.is_empty() {
            return Err(bad("empty vector".into()));
        }
        let dim = *set.dim.get_or_insert(r.vector.len());
        if r.vector.len() != dim {
            return Err(ProbeError::DimensionMismatch { line_no, expected: dim, found: r.vector.len() });
        }
        let table = match &r.excerpt {
            None => set.classes.entry(r.owner.clone()).or_insert_with(|| EmbeddingTable::new(&r.owner, dim)),
            Some(id) => {
                let t = set.excerpts.entry(id.clone()).or_insert_with(|| EmbeddingTable::new(&r.owner, dim));
                if t.owner != r.owner {
                    return Err(bad(format!("excerpt {id:?} already belongs to {:?}", t.owner)));
                }
                t
            }
        };
        table.insert(&r.word, &r.vector);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn line(owner: &str, word: &str, v: &[f64]) -> String {
        serde_json::to_string(&EmbeddingRecord { owner: owner.into(), word: word.into(), vector: v.to_vec(), excerpt: None })
            .unwrap()
    }

    #[test]
    fn duplicates_are_averaged() {
        let input = format!("{}\n{}\n", line("A", "dog", &[1.0, 0.0, 3.0]), line("A", "dog", &[3.0, 2.0, 1.0]));
        let set = parse_embeddings(&input).unwrap();
        let e = &set.classes["A"].words["dog"];
        assert_eq!(e.vector, vec![2.0, 1.0, 2.0]);
        assert_eq!(e.support, 2);
    }

    #[test]
    fn mixed_dimensions() {
        let input = format!("{}\n{}\n", line("A", "a", &[1.0, 2.0, 3.0]), line("B", "b", &[1.0, 2.0, 3.0, 4.0]));
        assert!(matches!(
            parse_embeddings(&input),
            Err(ProbeError::DimensionMismatch { line_no: 2, expected: 3, found: 4 })
        ));
    }

    #[test]
    fn excerpts_are_separate() {
        let input = r#"{"owner":"A","word":"x","vector":[1,0]}
{"owner":"A","word":"x","vector":[0,1],"excerpt":"a:000001"}
{"owner":"B","word":"x","vector":[0,1],"excerpt":"a:000001"}"#;
        assert!(matches!(parse_embeddings(input), Err(ProbeError::MalformedLine { line_no: 3, .. })));
        let set = parse_embeddings(&input.lines().take(2).collect::<Vec<_>>().join("\n")).unwrap();
        assert_eq!(set.classes["A"].get("x"), Some(&[1.0, 0.0][..]));
        assert_eq!(set.excerpts["a:000001"].get("x"), Some(&[0.0, 1.0][..]));
        assert!(parse_embeddings(r#"{"owner":"A","word":"x","vector":[1],"extra":2}"#).is_err());
    }

    #[test]
    fn order_invariant_average() {
        let mut rng = SplitMix64::new(5);
        let mut lines: Vec<String> = (0..300)
            .map(|i| {
                let v: Vec<f64> = (0..8).map(|_| rng.unit_f64() * 2.0 - 1.0).collect();
                line(&format!("C{}", i % 3), &format!("w{}", i % 17), &v)
            })
            .collect();
        let a = parse_embeddings(&lines.join("\n")).unwrap();
        rng.shuffle(&mut lines);
        let b = parse_embeddings(&lines.join("\n")).unwrap();
        for (owner, ta) in &a.classes {
            for (w, ea) in &ta.words {
                let eb = &b.classes[owner].words[w];
                assert_eq!(ea.support, eb.support);
                for (x, y) in ea.vector.iter().zip(&eb.vector) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }
}
