//! Per-novel train/validation/test assignment.
//!
//! Every training novel contributes exactly `train`, `val` and `test`
//! samples; every withheld novel contributes exactly `withheld_test` test
//! samples and nothing else. Each novel draws from its own SplitMix64
//! stream keyed by `(seed, novel_id)`; the first drawn samples go to train,
//! then validation, then test. Everything not drawn stays in the
//! assignment tagged `unused`.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusManifest, Sample};
use crate::rng::{derive_seed, SplitMix64};
use crate::Task;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("novel {novel_id:?} needs {needed} samples but has {available}")]
    InsufficientSamples { novel_id: String, needed: usize, available: usize },
    #[error("sample {sample_id:?} references unknown novel {novel_id:?}")]
    UnknownNovel { sample_id: String, novel_id: String },
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_per_novel: usize,
    pub val_per_novel: usize,
    pub test_per_novel: usize,
    pub withheld_test_per_novel: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn authorship(seed: u64) -> Self {
        Self { train_per_novel: 540, val_per_novel: 34, test_per_novel: 101, withheld_test_per_novel: 101, seed }
    }

    pub fn genre(seed: u64) -> Self {
        Self { train_per_novel: 320, val_per_novel: 20, test_per_novel: 60, withheld_test_per_novel: 60, seed }
    }

    pub fn for_task(task: Task, seed: u64) -> Self {
        match task {
            Task::Authorship => Self::authorship(seed),
            Task::Genre => Self::genre(seed),
        }
    }

    fn needed(&self, withheld: bool) -> usize {
        if withheld {
            self.withheld_test_per_novel
        } else {
            self.train_per_novel + self.val_per_novel + self.test_per_novel
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unused,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unused => "unused",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unused" => Ok(Split::Unused),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Split tag for every sample, in sample order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    entries: Vec<(String, Split)>,
    index: HashMap<String, usize>,
}

impl SplitAssignment {
    pub fn from_entries(entries: Vec<(String, Split)>) -> Self {
        let index = entries.iter().enumerate().map(|(i, (id, _))| (id.clone(), i)).collect();
        Self { entries, index }
    }

    pub fn get(&self, sample_id: &str) -> Option<Split> {
        self.index.get(sample_id).map(|&i| self.entries[i].1)
    }

    pub fn entries(&self) -> &[(String, Split)] {
        &self.entries
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|(_, s)| *s == split).count()
    }

    /// Samples tagged `split`, in input order.
    pub fn select<'a>(&self, samples: &'a [Sample], split: Split) -> Vec<&'a Sample> {
        samples.iter().filter(|s| self.get(&s.sample_id) == Some(split)).collect()
    }

    /// `sample_id TAB split` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, s) in &self.entries {
            writeln!(w, "{id}\t{}", s.as_str())?;
        }
        Ok(())
    }

    pub fn parse_tsv(input: &str) -> Result<Self, SplitError> {
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in input.lines().enumerate() {
            let line_no = n + 1;
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| SplitError::MalformedLine { line_no, reason };
            let (id, split) = line.split_once('\t').ok_or_else(|| bad("expected 2 fields".into()))?;
            if id.is_empty() || split.contains('\t') {
                return Err(bad("expected 2 non-empty fields".into()));
            }
            let split: Split = split.parse().map_err(bad)?;
            if !seen.insert(id.to_string()) {
                return Err(bad(format!("duplicate sample id {id:?}")));
            }
            entries.push((id.to_string(), split));
        }
        Ok(Self::from_entries(entries))
    }
}

pub fn assign_splits(manifest: &CorpusManifest, samples: &[Sample], spec: &SplitSpec) -> Result<SplitAssignment, SplitError> {
    let mut by_novel: HashMap<&str, Vec<usize>> = manifest.novels.iter().map(|n| (n.novel_id.as_str(), Vec::new())).collect();
    for (i, s) in samples.iter().enumerate() {
        by_novel
            .get_mut(s.novel_id.as_str())
            .ok_or_else(|| SplitError::UnknownNovel { sample_id: s.sample_id.clone(), novel_id: s.novel_id.clone() })?
            .push(i);
    }
    let mut tags = vec![Split::Unused; samples.len()];
    for novel in &manifest.novels {
        let members = &by_novel[novel.novel_id.as_str()];
        let needed = spec.needed(novel.withheld);
        if members.len() < needed {
            return Err(SplitError::InsufficientSamples {
                novel_id: novel.novel_id.clone(),
                needed,
                available: members.len(),
            });
        }
        let mut rng = SplitMix64::new(derive_seed(spec.seed, &novel.novel_id));
        let drawn = rng.sample_indices(members.len(), needed);
        let quotas: Vec<(Split, usize)> = if novel.withheld {
            vec![(Split::Test, spec.withheld_test_per_novel)]
        } else {
            vec![(Split::Train, spec.train_per_novel), (Split::Val, spec.val_per_novel), (Split::Test, spec.test_per_novel)]
        };
        let mut it = drawn.into_iter();
        for (split, q) in quotas {
            for local in it.by_ref().take(q) {
                tags[members[local]] = split;
            }
        }
    }
    Ok(SplitAssignment::from_entries(
        samples.iter().zip(tags).map(|(s, t)| (s.sample_id.clone(), t)).collect(),
    ))
}
