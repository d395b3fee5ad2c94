//! Report bundle layout and file helpers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stylus_core::classify::PredictionRecord;
use stylus_core::corpus::{parse_samples, CorpusManifest, Sample};
use stylus_core::probe_io::parse_predictions;
use stylus_core::splitter::SplitAssignment;

pub const MANIFEST: &str = "manifest.json";
pub const SAMPLES: &str = "samples.tsv";
pub const SPLIT: &str = "split.tsv";
pub const PROPN: &str = "annotations/propn.tsv";
pub const VARIANTS_DIR: &str = "variants";
pub const MODELS_DIR: &str = "models";
pub const PREDICTIONS_DIR: &str = "predictions";
pub const EXTERNAL_WEIGHTS: &str = "external/weights.tsv";
pub const EXTERNAL_EMBEDDINGS: &str = "external/embeddings.jsonl";
pub const EXTERNAL_POPULARITY: &str = "external/popularity.csv";
pub const ANALYSIS_DIR: &str = "analysis";
pub const ANALYSIS_SETTINGS: &str = "analysis.json";
pub const REPORT: &str = "report.md";
pub const RUNINFO: &str = "RUNINFO";
pub const CONFIG_COPY: &str = "config.json";
pub const CHECKPOINTS: &str = "checkpoints.json";
pub const FAILED: &str = "FAILED";

pub struct Bundle {
    pub root: PathBuf,
}

impl Bundle {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Bundle { root: root.into() }
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    pub fn variant_path(&self, variant_id: &str) -> PathBuf {
        self.root.join(VARIANTS_DIR).join(format!("{}.tsv", file_stem(variant_id)))
    }

    pub fn model_path(&self, model_id: &str) -> PathBuf {
        self.root.join(MODELS_DIR).join(format!("{}.json", file_stem(model_id)))
    }

    pub fn predictions_path(&self, model_id: &str, variant_id: &str) -> PathBuf {
        self.root.join(PREDICTIONS_DIR).join(format!("{}__{}.tsv", file_stem(model_id), file_stem(variant_id)))
    }

    pub fn write(&self, rel: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
        write_file(&self.path(rel), contents)
    }

    pub fn read(&self, rel: impl AsRef<Path>) -> Result<String> {
        let p = self.path(rel);
        fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))
    }

    pub fn manifest(&self) -> Result<CorpusManifest> {
        serde_json::from_str(&self.read(MANIFEST)?).context("parsing manifest.json")
    }

    pub fn samples(&self) -> Result<Vec<Sample>> {
        parse_samples(&self.read(SAMPLES)?).context("parsing samples.tsv")
    }

    pub fn split(&self) -> Result<SplitAssignment> {
        SplitAssignment::parse_tsv(&self.read(SPLIT)?).context("parsing split.tsv")
    }

    /// Every predictions file in the bundle, keyed by (model, variant) as
    /// recorded inside the file, in file-name order.
    pub fn predictions(&self, classes: &[String]) -> Result<BTreeMap<(String, String), Vec<PredictionRecord>>> {
        let mut out = BTreeMap::new();
        for path in sorted_files(&self.path(PREDICTIONS_DIR))? {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let records =
                parse_predictions(&text, classes, None).with_context(|| format!("parsing {}", path.display()))?;
            if let Some(first) = records.first() {
                out.insert((first.model_id.clone(), first.variant_id.clone()), records);
            }
        }
        Ok(out)
    }
}

/// Keeps ids readable in file names while ruling out path separators.
pub fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect()
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    v.retain(|p| p.is_file());
    v.sort();
    Ok(v)
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex(&Sha256::digest(data))
}

/// Hash over relative names and contents of files and directory trees.
/// Missing paths hash as absent rather than failing.
pub fn hash_paths(root: &Path, rels: &[PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    for rel in rels {
        let p = root.join(rel);
        let mut files = Vec::new();
        collect_files(&p, &mut files)?;
        files.sort();
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        for f in files {
            let name = f.strip_prefix(root).unwrap_or(&f).to_string_lossy().into_owned();
            h.update(name.as_bytes());
            h.update([0]);
            h.update(fs::read(&f).with_context(|| format!("reading {}", f.display()))?);
            h.update([0]);
        }
    }
    Ok(hex(&h.finalize()))
}

fn collect_files(p: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if p.is_file() {
        out.push(p.to_path_buf());
    } else if p.is_dir() {
        for e in fs::read_dir(p)? {
            collect_files(&e?.path(), out)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub input: String,
    pub output: String,
}

/// Stage checkpoints: a stage is skipped when its input key matches and its
/// outputs still hash to what was recorded.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Checkpoints {
    pub stages: BTreeMap<String, Checkpoint>,
}

impl Checkpoints {
    pub fn load(bundle: &Bundle) -> Self {
        bundle.read(CHECKPOINTS).ok().and_then(|s| serde_json::from_str(&s).ok()).unwrap_or_default()
    }

    pub fn save(&self, bundle: &Bundle) -> Result<()> {
        bundle.write(CHECKPOINTS, serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn is_fresh(&self, bundle: &Bundle, stage: &str, input: &str, outputs: &[PathBuf]) -> Result<bool> {
        Ok(match self.stages.get(stage) {
            Some(c) if c.input == input => {
                outputs.iter().all(|o| bundle.path(o).exists()) && hash_paths(&bundle.root, outputs)? == c.output
            }
            _ => false,
        })
    }
}
