//! Experiment configuration (TOML). Relative paths are resolved against the
//! directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stylus_core::analysis::PriorKind;
use stylus_core::classify::DEFAULT_MFW;
use stylus_core::perturb::VariantKind;
use stylus_core::probe_io::{Standardization, WeightKind};
use stylus_core::splitter::SplitSpec;
use stylus_core::Task;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    /// Bundle directory; `--out` overrides it.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub descriptor: PathBuf,
    #[serde(default)]
    pub text_dir: Option<PathBuf>,
    /// Extra character mappings on top of the default table.
    #[serde(default)]
    pub normalization: Option<PathBuf>,
}

/// Either a named preset or explicit per-novel quotas.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default)]
    pub preset: Option<Task>,
    pub train: Option<usize>,
    pub val: Option<usize>,
    pub test: Option<usize>,
    pub withheld_test: Option<usize>,
}

impl SplitConfig {
    pub fn spec(&self, task: Task, seed: u64) -> Result<SplitSpec> {
        let quotas = [self.train, self.val, self.test, self.withheld_test];
        if quotas.iter().all(Option::is_none) {
            return Ok(SplitSpec::for_task(self.preset.unwrap_or(task), seed));
        }
        if self.preset.is_some() {
            bail!("split: give either a preset or explicit quotas, not both");
        }
        let [Some(train), Some(val), Some(test), Some(withheld_test)] = quotas else {
            bail!("split: explicit quotas need train, val, test and withheld_test");
        };
        Ok(SplitSpec { train_per_novel: train, val_per_novel: val, test_per_novel: test, withheld_test_per_novel: withheld_test, seed })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    /// Variant ids; `"standard"` expands to the full ablation grid.
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    /// Proper-noun spans: a `sample_id TAB start TAB end` file, or
    /// `"heuristic"` for the built-in capitalization heuristic.
    #[serde(default)]
    pub propn: Option<String>,
}

fn default_variants() -> Vec<String> {
    vec!["normal".into()]
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig { variants: default_variants(), propn: None }
    }
}

impl PerturbConfig {
    pub fn kinds(&self) -> Result<Vec<VariantKind>> {
        let mut out: Vec<VariantKind> = Vec::new();
        for v in &self.variants {
            let expanded = if v == "standard" { VariantKind::standard_grid() } else { vec![VariantKind::parse(v, None)?] };
            for k in expanded {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
        }
        if out.is_empty() {
            bail!("perturb: variant list is empty");
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsConfig {
    #[serde(default = "default_builtin")]
    pub builtin: Vec<String>,
    #[serde(default = "default_mfw")]
    pub mfw: usize,
    #[serde(default = "default_reg")]
    pub svm_reg: f64,
    #[serde(default = "default_epochs")]
    pub svm_epochs: usize,
    /// Prediction files produced by external models.
    #[serde(default)]
    pub external: Vec<PathBuf>,
}

fn default_builtin() -> Vec<String> {
    vec!["cosine_delta".into()]
}
fn default_mfw() -> usize {
    DEFAULT_MFW
}
fn default_reg() -> f64 {
    1e-4
}
fn default_epochs() -> usize {
    10
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            builtin: default_builtin(),
            mfw: default_mfw(),
            svm_reg: default_reg(),
            svm_epochs: default_epochs(),
            external: Vec::new(),
        }
    }
}

pub const BUILTIN_MODELS: &[&str] = &["cosine_delta", "tfidf_svm", "random"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_iters")]
    pub bootstrap_iters: usize,
    #[serde(default = "default_top_n")]
    pub scapegoat_top_n: usize,
    #[serde(default = "default_cap")]
    pub style_sample_cap: usize,
    #[serde(default = "default_true")]
    pub svg: bool,
    #[serde(default)]
    pub fightin: Option<FightinConfig>,
    #[serde(default)]
    pub embeddings: Option<EmbeddingsConfig>,
    #[serde(default)]
    pub popularity: Option<PopularityConfig>,
}

fn default_iters() -> usize {
    stylus_core::analysis::DEFAULT_BOOTSTRAP_ITERS
}
fn default_top_n() -> usize {
    5
}
fn default_cap() -> usize {
    500
}
fn default_true() -> bool {
    true
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bootstrap_iters: default_iters(),
            scapegoat_top_n: default_top_n(),
            style_sample_cap: default_cap(),
            svg: true,
            fightin: None,
            embeddings: None,
            popularity: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FightinConfig {
    pub weights: PathBuf,
    pub kind: WeightKind,
    #[serde(default)]
    pub clamp_negative: bool,
    #[serde(default)]
    pub standardization: Standardization,
    /// Evaluation multiplicity per group; groups not listed count once.
    #[serde(default)]
    pub multiplicity: BTreeMap<String, u64>,
    #[serde(default)]
    pub prior: PriorKind,
    #[serde(default)]
    pub alpha0: Option<f64>,
    #[serde(default = "default_top")]
    pub top: usize,
    /// Explicit pairwise comparisons in addition to one-vs-rest per group.
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
}

fn default_top() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingsConfig {
    pub file: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopularityConfig {
    /// `author,chars` overrides consulted before the cache.
    #[serde(default)]
    pub manual: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus.descriptor);
        self.corpus.text_dir.as_mut().map(fix);
        self.corpus.normalization.as_mut().map(fix);
        self.output_dir.as_mut().map(fix);
        if let Some(p) = &mut self.perturb.propn {
            if p != "heuristic" && Path::new(p).is_relative() {
                *p = base.join(&*p).to_string_lossy().into_owned();
            }
        }
        self.models.external.iter_mut().for_each(fix);
        if let Some(f) = &mut self.analysis.fightin {
            fix(&mut f.weights);
        }
        if let Some(e) = &mut self.analysis.embeddings {
            fix(&mut e.file);
        }
        if let Some(p) = &mut self.analysis.popularity {
            p.manual.as_mut().map(fix);
        }
    }

    /// Checks everything that can be checked without doing work: referenced
    /// files exist, names parse, variants that need proper-noun spans have a
    /// source.
    pub fn validate(&self) -> Result<()> {
        let must_exist = |p: &Path, what: &str| -> Result<()> {
            if !p.exists() {
                bail!("{what} {} does not exist", p.display());
            }
            Ok(())
        };
        must_exist(&self.corpus.descriptor, "corpus descriptor")?;
        if let Some(d) = &self.corpus.text_dir {
            must_exist(d, "text directory")?;
        }
        if let Some(n) = &self.corpus.normalization {
            must_exist(n, "normalization table")?;
        }
        self.split.spec(self.task, 0)?;
        let kinds = self.perturb.kinds()?;
        match self.perturb.propn.as_deref() {
            None if kinds.iter().any(VariantKind::needs_propn) => {
                bail!("perturb: variants no_propn/all_modifications need `propn` (a span file or \"heuristic\")")
            }
            Some(p) if p != "heuristic" => must_exist(Path::new(p), "proper-noun annotation file")?,
            _ => {}
        }
        for m in &self.models.builtin {
            if !BUILTIN_MODELS.contains(&m.as_str()) {
                bail!("models: unknown built-in model {m:?} (expected one of {})", BUILTIN_MODELS.join(", "));
            }
        }
        if self.models.builtin.is_empty() && self.models.external.is_empty() {
            bail!("models: nothing to evaluate");
        }
        for p in &self.models.external {
            must_exist(p, "predictions file")?;
        }
        if self.analysis.bootstrap_iters == 0 {
            bail!("analysis: bootstrap_iters must be at least 1");
        }
        if let Some(f) = &self.analysis.fightin {
            must_exist(&f.weights, "weights file")?;
        }
        if let Some(e) = &self.analysis.embeddings {
            must_exist(&e.file, "embeddings file")?;
        }
        if let Some(p) = &self.analysis.popularity {
            if let Some(m) = &p.manual {
                must_exist(m, "manual popularity file")?;
            }
            if self.task != Task::Authorship {
                bail!("analysis.popularity only applies to the authorship task");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_defaults() {
        let cfg: ExperimentConfig = toml::from_str("task = \"genre\"\n[corpus]\ndescriptor = \"n.tsv\"\n").unwrap();
        assert_eq!(cfg.perturb.kinds().unwrap(), vec![VariantKind::Normal]);
        assert_eq!(cfg.models.builtin, vec!["cosine_delta"]);
        assert_eq!(cfg.split.spec(Task::Genre, 1).unwrap(), SplitSpec::genre(1));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("task = \"genre\"\nsed = 1\n[corpus]\ndescriptor = \"n\"\n").is_err());
    }

    #[test]
    fn quotas_all_or_nothing() {
        let s = SplitConfig { train: Some(3), ..Default::default() };
        assert!(s.spec(Task::Authorship, 0).is_err());
    }

    #[test]
    fn standard_grid_expands() {
        let p = PerturbConfig { variants: vec!["standard".into(), "normal".into()], propn: None };
        assert_eq!(p.kinds().unwrap().len(), VariantKind::standard_grid().len());
    }
}
