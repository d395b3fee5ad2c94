//! Corpus construction: novel ingestion, normalization, sentence
//! segmentation, the 20–50 word sample filter and the corpus manifest.

mod normalize;
mod segment;

pub use normalize::{normalize_text, normalize_text_with, NormalizationTable, DEFAULT_CHAR_MAP};
pub use segment::{segment_sentences, Segmenter, ABBREVIATIONS};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Task;

pub const MIN_WORDS: usize = 20;
pub const MAX_WORDS: usize = 50;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate novel id {0:?}")]
    DuplicateNovelId(String),
    #[error("novel {0:?} yields no qualifying samples")]
    EmptyNovel(String),
    #[error("novel {0:?} has empty text")]
    EmptyText(String),
    #[error("novel {0:?} has an empty class label")]
    EmptyClassLabel(String),
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("invalid normalization mapping: {0}")]
    InvalidMapping(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NovelDoc {
    pub novel_id: String,
    pub class_label: String,
    pub title: String,
    pub year: i32,
    pub raw_text: String,
    pub withheld: bool,
}

/// Novel metadata as recorded in the manifest (no text).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NovelMeta {
    pub novel_id: String,
    pub class_label: String,
    pub title: String,
    pub year: i32,
    pub withheld: bool,
}

impl From<&NovelDoc> for NovelMeta {
    fn from(n: &NovelDoc) -> Self {
        Self {
            novel_id: n.novel_id.clone(),
            class_label: n.class_label.clone(),
            title: n.title.clone(),
            year: n.year,
            withheld: n.withheld,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub novel_id: String,
    pub class_label: String,
    pub text: String,
    pub word_count: usize,
    pub from_withheld_novel: bool,
}

/// A non-withheld novel with fewer qualifying sentences than the task's
/// inclusion threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortNovelWarning {
    pub novel_id: String,
    pub samples: usize,
    pub threshold: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub task: Task,
    pub classes: Vec<String>,
    pub novels: Vec<NovelMeta>,
    pub samples_per_novel: BTreeMap<String, usize>,
    pub warnings: Vec<ShortNovelWarning>,
}

impl CorpusManifest {
    pub fn novel(&self, novel_id: &str) -> Option<&NovelMeta> {
        self.novels.iter().find(|n| n.novel_id == novel_id)
    }
}

/// Number of maximal non-whitespace runs.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Keeps sentences with 20 to 50 words (inclusive), joining internal
/// whitespace with single spaces, and numbers them `<novel_id>:<nnnnnn>`.
pub fn filter_samples(sentences: &[String], novel: &NovelDoc) -> Vec<Sample> {
    sentences
        .iter()
        .filter_map(|s| {
            let w = word_count(s);
            (MIN_WORDS..=MAX_WORDS).contains(&w).then(|| s.split_whitespace().collect::<Vec<_>>().join(" "))
        })
        .enumerate()
        .map(|(i, text)| Sample {
            sample_id: format!("{}:{:06}", novel.novel_id, i),
            novel_id: novel.novel_id.clone(),
            class_label: novel.class_label.clone(),
            word_count: word_count(&text),
            text,
            from_withheld_novel: novel.withheld,
        })
        .collect()
}

/// normalize → segment → filter for one novel.
pub fn process_novel(novel: &NovelDoc, table: &NormalizationTable, segmenter: &Segmenter) -> Vec<Sample> {
    let text = normalize_text_with(&novel.raw_text, table);
    let sentences = segmenter.segment(&text);
    filter_samples(&sentences, novel)
}

/// Builds the manifest for already processed novels.
pub fn build_manifest(task: Task, novels: &[NovelDoc], samples: &[Sample]) -> Result<CorpusManifest, CorpusError> {
    let mut seen = HashSet::new();
    for n in novels {
        if !seen.insert(n.novel_id.as_str()) {
            return Err(CorpusError::DuplicateNovelId(n.novel_id.clone()));
        }
        if n.class_label.trim().is_empty() {
            return Err(CorpusError::EmptyClassLabel(n.novel_id.clone()));
        }
    }
    let mut counts: BTreeMap<String, usize> = novels.iter().map(|n| (n.novel_id.clone(), 0)).collect();
    for s in samples {
        if let Some(c) = counts.get_mut(&s.novel_id) {
            *c += 1;
        }
    }
    let threshold = task.min_samples_per_novel();
    let mut warnings = Vec::new();
    for n in novels {
        let c = counts[&n.novel_id];
        if c == 0 {
            return Err(CorpusError::EmptyNovel(n.novel_id.clone()));
        }
        if !n.withheld && c < threshold {
            warnings.push(ShortNovelWarning { novel_id: n.novel_id.clone(), samples: c, threshold });
        }
    }
    let classes: BTreeSet<String> = novels.iter().map(|n| n.class_label.clone()).collect();
    Ok(CorpusManifest {
        task,
        classes: classes.into_iter().collect(),
        novels: novels.iter().map(NovelMeta::from).collect(),
        samples_per_novel: counts,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub samples: Vec<Sample>,
}

/// Processes every novel (in parallel) and builds the manifest. Sample order
/// follows novel order.
pub fn build_corpus(task: Task, novels: &[NovelDoc], table: &NormalizationTable) -> Result<Corpus, CorpusError> {
    for n in novels {
        if n.raw_text.trim().is_empty() {
            return Err(CorpusError::EmptyText(n.novel_id.clone()));
        }
    }
    let segmenter = Segmenter::default();
    let per_novel: Vec<Vec<Sample>> = novels.par_iter().map(|n| process_novel(n, table, &segmenter)).collect();
    let samples: Vec<Sample> = per_novel.into_iter().flatten().collect();
    let manifest = build_manifest(task, novels, &samples)?;
    Ok(Corpus { manifest, samples })
}

/// One corpus descriptor record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptorEntry {
    pub novel_id: String,
    pub class_label: String,
    pub title: String,
    pub year: i32,
    pub withheld: bool,
    /// Text file path, relative to the descriptor; defaults to `<novel_id>.txt`.
    pub path: Option<String>,
}

pub(crate) fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Parses a corpus descriptor:
/// `novel_id TAB class_label TAB title TAB year TAB withheld [TAB path]`.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_descriptor(input: &str) -> Result<Vec<DescriptorEntry>, CorpusError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if !(5..=6).contains(&f.len()) {
            return Err(CorpusError::MalformedLine { line_no, reason: format!("expected 5 or 6 fields, got {}", f.len()) });
        }
        let bad = |reason: String| CorpusError::MalformedLine { line_no, reason };
        let novel_id = f[0].trim();
        if novel_id.is_empty() {
            return Err(bad("empty novel_id".into()));
        }
        let class_label = f[1].trim();
        if class_label.is_empty() {
            return Err(bad("empty class_label".into()));
        }
        let year = f[3].trim().parse::<i32>().map_err(|_| bad(format!("bad year {:?}", f[3])))?;
        let withheld = parse_bool(f[4]).ok_or_else(|| bad(format!("bad withheld flag {:?}", f[4])))?;
        let path = f.get(5).map(|p| p.trim().to_string()).filter(|p| !p.is_empty());
        out.push(DescriptorEntry {
            novel_id: novel_id.to_string(),
            class_label: class_label.to_string(),
            title: f[2].trim().to_string(),
            year,
            withheld,
            path,
        });
    }
    Ok(out)
}

/// Reads a descriptor file and the novel texts it references.
pub fn load_novels(descriptor: &Path, text_dir: Option<&Path>) -> Result<Vec<NovelDoc>, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let content = std::fs::read_to_string(descriptor).map_err(io_err(descriptor))?;
    let base = text_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| descriptor.parent().unwrap_or(Path::new(".")).to_path_buf());
    parse_descriptor(&content)?
        .into_iter()
        .map(|e| {
            let rel = e.path.clone().unwrap_or_else(|| format!("{}.txt", e.novel_id));
            let path = base.join(rel);
            let raw_text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
            if raw_text.trim().is_empty() {
                return Err(CorpusError::EmptyText(e.novel_id));
            }
            Ok(NovelDoc {
                novel_id: e.novel_id,
                class_label: e.class_label,
                title: e.title,
                year: e.year,
                raw_text,
                withheld: e.withheld,
            })
        })
        .collect()
}

/// Writes `sample_id TAB novel_id TAB class_label TAB withheld TAB text` lines.
pub fn write_samples<W: Write>(mut w: W, samples: &[Sample]) -> std::io::Result<()> {
    for s in samples {
        writeln!(w, "{}\t{}\t{}\t{}\t{}", s.sample_id, s.novel_id, s.class_label, s.from_withheld_novel, s.text)?;
    }
    Ok(())
}

/// Parses the samples file written by [`write_samples`].
pub fn parse_samples(input: &str) -> Result<Vec<Sample>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.splitn(5, '\t').collect();
        let bad = |reason: String| CorpusError::MalformedLine { line_no, reason };
        if f.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", f.len())));
        }
        if f[0].is_empty() || f[1].is_empty() || f[2].is_empty() {
            return Err(bad("empty id or label".into()));
        }
        if !ids.insert(f[0]) {
            return Err(bad(format!("duplicate sample id {:?}", f[0])));
        }
        let withheld = parse_bool(f[3]).ok_or_else(|| bad(format!("bad withheld flag {:?}", f[3])))?;
        let text = f[4];
        if text.contains('\t') || text.trim() != text {
            return Err(bad("text must be trimmed and tab-free".into()));
        }
        out.push(Sample {
            sample_id: f[0].to_string(),
            novel_id: f[1].to_string(),
            class_label: f[2].to_string(),
            word_count: word_count(text),
            text: text.to_string(),
            from_withheld_novel: withheld,
        });
    }
    Ok(out)
}
