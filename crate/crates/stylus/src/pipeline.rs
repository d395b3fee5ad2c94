//! Pipeline stages. Each stage reads its inputs from the bundle and writes
//! its outputs back, so the CLI can run them one at a time or all together.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stylus_core::classify::{
    build_delta_profiles, train_svm, write_predictions, Predicted, PredictionRecord, RandomBaseline, SavedModel,
    StyleClassifier, SvmParams,
};
use stylus_core::corpus::{build_corpus, load_novels, write_samples, NormalizationTable, Sample};
use stylus_core::perturb::{
    apply_variant, heuristic_propn, parse_propn_annotations, PropnAnnotation, PropnEvidence, StopwordLexicon,
    VariantKind, VariantSpec,
};
use stylus_core::probe_io::{
    parse_embeddings, parse_predictions, parse_weight_triples, NegativePolicy, PopularityClient, ProbeError,
    WeightKind,
};
use stylus_core::rng::derive_seed;
use stylus_core::splitter::{assign_splits, Split, SplitSpec};
use stylus_core::Task;

use crate::analyze::{self, AnalysisSettings, FightinSettings};
use crate::bundle::{self, hash_paths, sha256_hex, Bundle, Checkpoint, Checkpoints};
use crate::config::ExperimentConfig;

pub fn corpus(bundle: &Bundle, task: Task, descriptor: &Path, text_dir: Option<&Path>, normalization: Option<&Path>) -> Result<()> {
    let table = match normalization {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            NormalizationTable::parse_tsv(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => NormalizationTable::default(),
    };
    let novels = load_novels(descriptor, text_dir)?;
    let corpus = build_corpus(task, &novels, &table)?;
    for w in &corpus.manifest.warnings {
        eprintln!("warning: novel {} has {} samples (threshold {})", w.novel_id, w.samples, w.threshold);
    }
    bundle.write(bundle::MANIFEST, serde_json::to_string_pretty(&corpus.manifest)? + "\n")?;
    let mut buf = Vec::new();
    write_samples(&mut buf, &corpus.samples)?;
    bundle.write(bundle::SAMPLES, buf)
}

pub fn split(bundle: &Bundle, spec: &SplitSpec) -> Result<()> {
    let assignment = assign_splits(&bundle.manifest()?, &bundle.samples()?, spec)?;
    let mut buf = Vec::new();
    assignment.write_tsv(&mut buf)?;
    bundle.write(bundle::SPLIT, buf)
}

fn test_samples(bundle: &Bundle) -> Result<Vec<Sample>> {
    let samples = bundle.samples()?;
    let split = bundle.split()?;
    Ok(split.select(&samples, Split::Test).into_iter().cloned().collect())
}

fn train_samples(bundle: &Bundle) -> Result<Vec<Sample>> {
    let samples = bundle.samples()?;
    let split = bundle.split()?;
    Ok(split.select(&samples, Split::Train).into_iter().cloned().collect())
}

/// Where proper-noun spans come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropnSource {
    File(PathBuf),
    Heuristic,
}

impl PropnSource {
    pub fn parse(s: &str) -> Self {
        if s == "heuristic" {
            PropnSource::Heuristic
        } else {
            PropnSource::File(PathBuf::from(s))
        }
    }
}

/// Writes one samples file per variant, holding the ablated test samples.
pub fn perturb(bundle: &Bundle, kinds: &[VariantKind], propn: Option<&PropnSource>, seed: u64) -> Result<()> {
    let test = test_samples(bundle)?;
    let lexicon = StopwordLexicon::default();
    let annotations = match propn {
        Some(PropnSource::File(p)) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(parse_propn_annotations(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        Some(PropnSource::Heuristic) => {
            let all = bundle.samples()?;
            let evidence = PropnEvidence::from_samples(&all, &lexicon);
            let mut ann = PropnAnnotation::default();
            for s in &test {
                let found = heuristic_propn(s, &lexicon, Some(&evidence));
                ann.insert(&s.sample_id, found.get(&s.sample_id).unwrap_or_default().to_vec());
            }
            Some(ann)
        }
        None => None,
    };
    if let Some(a) = &annotations {
        bundle.write(bundle::PROPN, a.to_tsv())?;
    }
    if annotations.is_none() && kinds.iter().any(VariantKind::needs_propn) {
        bail!("variants no_propn and all_modifications need proper-noun spans (a span file or `heuristic`)");
    }
    let variant_seed = derive_seed(seed, "perturb");
    for kind in kinds {
        let spec = VariantSpec::new(*kind, variant_seed);
        let out: Vec<Sample> = test
            .par_iter()
            .map(|s| {
                let spans = annotations.as_ref().and_then(|a| a.get(&s.sample_id));
                let text = apply_variant(s, &spec, &lexicon, spans)?;
                Ok(Sample { text, ..s.clone() })
            })
            .collect::<Result<_, stylus_core::perturb::PerturbError>>()
            .with_context(|| format!("building variant {}", kind.id()))?;
        let mut buf = Vec::new();
        write_samples(&mut buf, &out)?;
        bundle::write_file(&bundle.variant_path(&kind.id()), buf)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mfw: usize,
    pub svm_reg: f64,
    pub svm_epochs: usize,
}

/// The random baseline has no learned state, so it is stored as its seed.
#[derive(Serialize, Deserialize)]
struct RandomModelFile {
    format: String,
    version: u32,
    seed: u64,
    classes: Vec<String>,
}

enum LoadedModel {
    Saved(SavedModel),
    Random(RandomBaseline),
}

impl LoadedModel {
    fn classifier(&self) -> &dyn StyleClassifier {
        match self {
            LoadedModel::Saved(m) => m.classifier(),
            LoadedModel::Random(r) => r,
        }
    }
}

fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(r) = serde_json::from_str::<RandomModelFile>(&text) {
        if r.format == "random" && r.version == 1 {
            return Ok(LoadedModel::Random(RandomBaseline::new(&r.classes, r.seed)));
        }
    }
    Ok(LoadedModel::Saved(SavedModel::from_json(&text).with_context(|| format!("loading {}", path.display()))?))
}

/// Trains the named built-in models on the train split.
pub fn train(bundle: &Bundle, models: &[String], params: ModelParams, seed: u64) -> Result<()> {
    let train = train_samples(bundle)?;
    let refs: Vec<&Sample> = train.iter().collect();
    let classes = bundle.manifest()?.classes;
    for name in models {
        let json = match name.as_str() {
            "cosine_delta" => SavedModel::CosineDelta(build_delta_profiles(&refs, &classes, params.mfw)?).to_json()?,
            "tfidf_svm" => {
                let p = SvmParams { reg: params.svm_reg, epochs: params.svm_epochs, seed: derive_seed(seed, "tfidf_svm") };
                SavedModel::TfidfSvm(train_svm(&refs, p)?).to_json()?
            }
            "random" => serde_json::to_string(&RandomModelFile {
                format: "random".into(),
                version: 1,
                seed: derive_seed(seed, "random"),
                classes: classes.clone(),
            })?,
            other => bail!("unknown built-in model {other:?}"),
        };
        bundle::write_file(&bundle.model_path(name), json + "\n")?;
    }
    Ok(())
}

/// Runs every saved model over every variant.
pub fn predict(bundle: &Bundle) -> Result<()> {
    let classes = bundle.manifest()?.classes;
    let variants = bundle::sorted_files(&bundle.path(bundle::VARIANTS_DIR))?;
    if variants.is_empty() {
        bail!("no variants in {}; run perturb first", bundle.root.display());
    }
    for model_path in bundle::sorted_files(&bundle.path(bundle::MODELS_DIR))? {
        let model = load_model(&model_path)?;
        let clf = model.classifier();
        for vpath in &variants {
            let variant_id = vpath.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(vpath).with_context(|| format!("reading {}", vpath.display()))?;
            let samples = stylus_core::corpus::parse_samples(&text).with_context(|| format!("parsing {}", vpath.display()))?;
            let records: Vec<PredictionRecord> = samples
                .par_iter()
                .map(|s| PredictionRecord {
                    sample_id: s.sample_id.clone(),
                    model_id: clf.model_id().to_string(),
                    variant_id: variant_id.clone(),
                    predicted: Predicted::classify(&clf.predict(&s.sample_id, &s.text).label, &classes),
                    true_label: s.class_label.clone(),
                    from_withheld_novel: s.from_withheld_novel,
                })
                .collect();
            let mut buf = Vec::new();
            write_predictions(&mut buf, &records)?;
            bundle::write_file(&bundle.predictions_path(clf.model_id(), &variant_id), buf)?;
        }
    }
    Ok(())
}

/// Validates an external predictions file against the test split and stores
/// one file per (model, variant) it contains.
pub fn ingest_predictions(bundle: &Bundle, path: &Path) -> Result<Vec<(String, String)>> {
    let classes = bundle.manifest()?.classes;
    let test = test_samples(bundle)?;
    let known: HashSet<String> = test.iter().map(|s| s.sample_id.clone()).collect();
    let by_id: BTreeMap<&str, &Sample> = test.iter().map(|s| (s.sample_id.as_str(), s)).collect();
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records = parse_predictions(&text, &classes, Some(&known)).with_context(|| format!("parsing {}", path.display()))?;
    let mut groups: BTreeMap<(String, String), Vec<PredictionRecord>> = BTreeMap::new();
    for r in records {
        let s = by_id[r.sample_id.as_str()];
        if s.class_label != r.true_label || s.from_withheld_novel != r.from_withheld_novel {
            bail!("{}: sample {} disagrees with the corpus about its label or withheld flag", path.display(), r.sample_id);
        }
        groups.entry((r.model_id.clone(), r.variant_id.clone())).or_default().push(r);
    }
    for ((model, variant), recs) in &groups {
        let mut seen = HashSet::new();
        if let Some(dup) = recs.iter().find(|r| !seen.insert(r.sample_id.as_str())) {
            bail!("{}: sample {} predicted twice for {model}/{variant}", path.display(), dup.sample_id);
        }
        let mut buf = Vec::new();
        write_predictions(&mut buf, recs)?;
        bundle::write_file(&bundle.predictions_path(model, variant), buf)?;
    }
    Ok(groups.into_keys().collect())
}

pub fn ingest_weights(bundle: &Bundle, path: &Path, kind: WeightKind, clamp_negative: bool) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let policy = if clamp_negative { NegativePolicy::Clamp } else { NegativePolicy::Reject };
    let (_, warnings) = parse_weight_triples(&text, kind, policy).with_context(|| format!("parsing {}", path.display()))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    bundle.write(bundle::EXTERNAL_WEIGHTS, text)
}

pub fn ingest_embeddings(bundle: &Bundle, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let set = parse_embeddings(&text).with_context(|| format!("parsing {}", path.display()))?;
    let classes: HashSet<String> = bundle.manifest()?.classes.into_iter().collect();
    for owner in set.classes.keys().filter(|o| o.as_str() != stylus_core::probe_io::AVERAGE_OWNER) {
        if !classes.contains(owner) {
            eprintln!("warning: {}: embeddings for {owner:?}, which is not a corpus class", path.display());
        }
    }
    bundle.write(bundle::EXTERNAL_EMBEDDINGS, text)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Looks up every class's page length. Authors without a page are skipped
/// with a warning; being offline without a cached value is an error.
pub fn ingest_popularity(bundle: &Bundle, client: &mut PopularityClient) -> Result<()> {
    let manifest = bundle.manifest()?;
    if manifest.task != Task::Authorship {
        bail!("popularity only applies to authorship corpora");
    }
    let mut out = String::from("author,chars\n");
    for author in &manifest.classes {
        match client.lookup(author) {
            Ok(r) => out.push_str(&format!("{},{}\n", csv_field(author), r.wiki_char_length)),
            Err(ProbeError::PageNotFound(a)) => eprintln!("warning: no Wikipedia page for {a:?}; left out"),
            Err(e @ ProbeError::NetworkUnavailable(_)) => {
                return Err(e).context("add the author to the manual file or cache, or drop --offline")
            }
            Err(e) => return Err(e.into()),
        }
    }
    bundle.write(bundle::EXTERNAL_POPULARITY, out)
}

pub fn write_analysis_settings(bundle: &Bundle, s: &AnalysisSettings) -> Result<()> {
    bundle.write(bundle::ANALYSIS_SETTINGS, serde_json::to_string_pretty(s)? + "\n")
}

pub fn analysis_settings(cfg: &ExperimentConfig) -> AnalysisSettings {
    let a = &cfg.analysis;
    AnalysisSettings {
        bootstrap_iters: a.bootstrap_iters,
        bootstrap_seed: derive_seed(cfg.seed, "bootstrap"),
        scapegoat_top_n: a.scapegoat_top_n,
        style_sample_cap: a.style_sample_cap,
        style_seed: derive_seed(cfg.seed, "style"),
        svg: a.svg,
        fightin: a.fightin.as_ref().map(|f| FightinSettings {
            kind: f.kind,
            clamp_negative: f.clamp_negative,
            standardization: f.standardization,
            multiplicity: f.multiplicity.clone(),
            prior: f.prior,
            alpha0: f.alpha0,
            top: f.top,
            pairs: f.pairs.clone(),
        }),
    }
}

/// Options that come from the command line rather than the config.
pub struct RunOptions {
    pub offline: bool,
    pub cache_dir: PathBuf,
    /// Page source for popularity lookups; `None` means offline-only.
    pub page_source: Option<Box<dyn stylus_core::probe_io::PageSource>>,
}

#[derive(Serialize)]
struct RunInfo<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    seed: u64,
    derived_seeds: BTreeMap<&'a str, u64>,
}

/// Hash of external files a stage reads, named relative to their parent so
/// moving the inputs together does not invalidate checkpoints.
fn hash_inputs(paths: &[&Path]) -> Result<String> {
    let mut parts = String::new();
    for p in paths {
        let parent = p.parent().unwrap_or(Path::new("."));
        let name = PathBuf::from(p.file_name().unwrap_or_default());
        parts.push_str(&hash_paths(parent, &[name])?);
        parts.push('\n');
    }
    Ok(sha256_hex(parts.as_bytes()))
}

struct Stages<'a> {
    bundle: &'a Bundle,
    checkpoints: Checkpoints,
    upstream: String,
}

impl Stages<'_> {
    /// Runs `f` unless the stage's inputs and outputs are unchanged since the
    /// last run. Each stage's key folds in the previous stage's outputs.
    fn run(&mut self, name: &str, key: &str, outputs: &[&str], f: impl FnOnce() -> Result<()>) -> Result<()> {
        let input = sha256_hex(format!("{}\n{key}", self.upstream).as_bytes());
        let outputs: Vec<PathBuf> = outputs.iter().map(PathBuf::from).collect();
        if !self.checkpoints.is_fresh(self.bundle, name, &input, &outputs)? {
            for o in &outputs {
                let p = self.bundle.path(o);
                if p.is_dir() {
                    std::fs::remove_dir_all(&p).with_context(|| format!("clearing {}", p.display()))?;
                }
            }
            f().with_context(|| format!("stage {name}"))?;
        }
        let output = hash_paths(&self.bundle.root, &outputs)?;
        self.upstream = output.clone();
        self.checkpoints.stages.insert(name.to_string(), Checkpoint { input, output });
        self.checkpoints.save(self.bundle)
    }
}

/// Runs every stage from a config. On failure a `FAILED` marker with the
/// error is left in the bundle.
pub fn run(cfg: &ExperimentConfig, config_bytes: &[u8], out: &Path, opts: RunOptions) -> Result<()> {
    cfg.validate()?;
    let bundle = Bundle::new(out);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let _ = std::fs::remove_file(bundle.path(bundle::FAILED));
    let result = run_stages(cfg, config_bytes, &bundle, opts);
    if let Err(e) = &result {
        bundle.write(bundle::FAILED, format!("{e:#}\n"))?;
    }
    result
}

fn run_stages(cfg: &ExperimentConfig, config_bytes: &[u8], bundle: &Bundle, opts: RunOptions) -> Result<()> {
    let seed = cfg.seed;
    let mut stages = Stages { bundle, checkpoints: Checkpoints::load(bundle), upstream: String::new() };

    let mut corpus_inputs: Vec<&Path> = vec![&cfg.corpus.descriptor];
    if let Some(d) = &cfg.corpus.text_dir {
        corpus_inputs.push(d);
    }
    if let Some(n) = &cfg.corpus.normalization {
        corpus_inputs.push(n);
    }
    // Without a text directory the descriptor's paths are relative to it,
    // so the whole directory is an input.
    let descriptor_dir;
    if cfg.corpus.text_dir.is_none() {
        descriptor_dir = cfg.corpus.descriptor.parent().unwrap_or(Path::new(".")).to_path_buf();
        corpus_inputs.push(&descriptor_dir);
    }
    let key = format!("{}\n{}", cfg.task, hash_inputs(&corpus_inputs)?);
    stages.run("corpus", &key, &[bundle::MANIFEST, bundle::SAMPLES], || {
        corpus(bundle, cfg.task, &cfg.corpus.descriptor, cfg.corpus.text_dir.as_deref(), cfg.corpus.normalization.as_deref())
    })?;

    let spec = cfg.split.spec(cfg.task, derive_seed(seed, "split"))?;
    stages.run("split", &serde_json::to_string(&spec)?, &[bundle::SPLIT], || split(bundle, &spec))?;

    let kinds = cfg.perturb.kinds()?;
    let propn = cfg.perturb.propn.as_deref().map(PropnSource::parse);
    let mut key = serde_json::to_string(&(&kinds, seed))?;
    if let Some(PropnSource::File(p)) = &propn {
        key.push_str(&hash_inputs(&[p])?);
    } else if propn.is_some() {
        key.push_str("heuristic");
    }
    stages.run("perturb", &key, &[bundle::VARIANTS_DIR, bundle::PROPN], || perturb(bundle, &kinds, propn.as_ref(), seed))?;

    let params = ModelParams { mfw: cfg.models.mfw, svm_reg: cfg.models.svm_reg, svm_epochs: cfg.models.svm_epochs };
    let key = serde_json::to_string(&(&cfg.models.builtin, params, seed))?;
    let external: Vec<&Path> = cfg.models.external.iter().map(PathBuf::as_path).collect();
    let key = format!("{key}\n{}", hash_inputs(&external)?);
    stages.run("models", &key, &[bundle::MODELS_DIR, bundle::PREDICTIONS_DIR], || {
        train(bundle, &cfg.models.builtin, params, seed)?;
        if !cfg.models.builtin.is_empty() {
            predict(bundle)?;
        }
        for p in &cfg.models.external {
            ingest_predictions(bundle, p)?;
        }
        Ok(())
    })?;

    let a = &cfg.analysis;
    std::fs::remove_dir_all(bundle.path("external")).ok();
    if let Some(f) = &a.fightin {
        ingest_weights(bundle, &f.weights, f.kind, f.clamp_negative)?;
    }
    if let Some(e) = &a.embeddings {
        ingest_embeddings(bundle, &e.file)?;
    }
    if let Some(p) = &a.popularity {
        let mut client = PopularityClient::open(&opts.cache_dir, opts.offline, opts.page_source)?;
        if let Some(m) = &p.manual {
            client.add_manual_file(m)?;
        }
        ingest_popularity(bundle, &mut client)?;
    }

    bundle.write(bundle::CONFIG_COPY, serde_json::to_string_pretty(cfg)? + "\n")?;
    let settings = analysis_settings(cfg);
    write_analysis_settings(bundle, &settings)?;
    let derived_seeds = BTreeMap::from([
        ("split", spec.seed),
        ("perturb", derive_seed(seed, "perturb")),
        ("tfidf_svm", derive_seed(seed, "tfidf_svm")),
        ("random", derive_seed(seed, "random")),
        ("bootstrap", settings.bootstrap_seed),
        ("style", settings.style_seed),
    ]);
    let info = RunInfo {
        tool: "stylus",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(config_bytes),
        seed,
        derived_seeds,
    };
    bundle.write(bundle::RUNINFO, serde_json::to_string_pretty(&info)? + "\n")?;

    let ctx = analyze::BundleData::load(Bundle::new(&bundle.root))?;
    std::fs::remove_dir_all(bundle.path(bundle::ANALYSIS_DIR)).ok();
    analyze::report(&ctx)
}
