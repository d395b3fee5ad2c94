//! Argument parsing and dispatch.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use stylus_core::analysis::PriorKind;
use stylus_core::perturb::VariantKind;
use stylus_core::probe_io::{
    emit_finetune_records, write_finetune_jsonl, FinetuneStyle, PopularityClient, Standardization, WeightKind,
    WikipediaSource,
};
use stylus_core::splitter::{Split, SplitSpec};
use stylus_core::Task;

use crate::analyze::{self, AnalysisKind, AnalysisSettings, FightinSettings};
use crate::bundle::{self, Bundle};
use crate::config::ExperimentConfig;
use crate::pipeline::{self, ModelParams, PropnSource, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "stylus", version, about = "Stylometric corpora, ablations, classifiers and analyses")]
pub struct Cli {
    /// Master seed; every random step derives its own seed from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Never touch the network; popularity lookups use the cache only.
    #[arg(long, global = true)]
    pub offline: bool,
    /// Cache directory for popularity lookups.
    #[arg(long, global = true, env = "STYLUS_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a corpus or export fine-tuning records.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Assign train/val/test splits.
    Split(SplitArgs),
    /// Write ablated copies of the test split.
    Perturb(PerturbArgs),
    /// Train built-in classifiers on the train split.
    Train(TrainArgs),
    /// Predict every variant with every trained model.
    Predict(BundleArg),
    /// Bring externally produced outputs into a bundle.
    #[command(subcommand)]
    Ingest(IngestCmd),
    /// Run one analysis over a bundle.
    Analyze(AnalyzeArgs),
    /// Regenerate every analysis and report.md from a bundle.
    Report(BundleArg),
    /// Run the whole pipeline from a config file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct BundleArg {
    /// Report bundle directory.
    #[arg(long)]
    pub bundle: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CorpusCmd {
    /// Normalize, segment and filter novels into a new bundle.
    Build(CorpusBuildArgs),
    /// Export prompt/target pairs for one split as JSON lines.
    Finetune(FinetuneArgs),
}

#[derive(Debug, Args)]
pub struct CorpusBuildArgs {
    /// Novel descriptor TSV.
    #[arg(long)]
    pub descriptor: PathBuf,
    /// Directory holding `<novel_id>.txt`; defaults to the descriptor's directory.
    #[arg(long)]
    pub text_dir: Option<PathBuf>,
    /// Extra `U+XXXX<TAB>replacement` character mappings.
    #[arg(long)]
    pub normalization: Option<PathBuf>,
    /// `authorship` or `genre`.
    #[arg(long)]
    pub task: Task,
    /// Bundle directory to create.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// `t5_mask` or `causal_suffix`.
    #[arg(long)]
    pub style: FinetuneStyle,
    #[arg(long, default_value = "train")]
    pub split: Split,
    /// Export a variant of the test split instead of the original text.
    #[arg(long)]
    pub variant: Option<String>,
    /// Output JSON-lines file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Per-novel quotas; all four or none (task preset).
    #[arg(long, requires_all = ["val", "test", "withheld_test"])]
    pub train: Option<usize>,
    #[arg(long)]
    pub val: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub withheld_test: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Variant ids; `standard` is the full grid.
    #[arg(long = "variant", default_value = "standard")]
    pub variants: Vec<String>,
    /// Proper-noun span file, or `heuristic`.
    #[arg(long)]
    pub propn: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// `cosine_delta`, `tfidf_svm` or `random`; repeatable.
    #[arg(long = "model", default_values = ["cosine_delta"])]
    pub models: Vec<String>,
    /// Most-frequent words used by cosine delta.
    #[arg(long, default_value_t = stylus_core::classify::DEFAULT_MFW)]
    pub mfw: usize,
    /// SVM L2 regularization strength.
    #[arg(long, default_value_t = 1e-4)]
    pub svm_reg: f64,
    #[arg(long, default_value_t = 10)]
    pub svm_epochs: usize,
}

#[derive(Debug, Subcommand)]
pub enum IngestCmd {
    /// Six-field predictions TSV.
    Predictions(IngestFile),
    /// `group TAB token TAB weight` triples.
    Weights(IngestWeights),
    /// Contextual embeddings as JSON lines.
    Embeddings(IngestFile),
    /// Wikipedia page lengths for every author class.
    Popularity(IngestPopularity),
}

#[derive(Debug, Args)]
pub struct IngestFile {
    #[command(flatten)]
    pub bundle: BundleArg,
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestWeights {
    #[command(flatten)]
    pub bundle: BundleArg,
    pub file: PathBuf,
    /// `count`, `attention_sum` or `attribution_sum`.
    #[arg(long)]
    pub kind: WeightKind,
    /// Clamp negative attribution weights to zero instead of rejecting them.
    #[arg(long)]
    pub clamp_negative: bool,
}

#[derive(Debug, Args)]
pub struct IngestPopularity {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// `author,chars` overrides.
    #[arg(long)]
    pub manual: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub kind: AnalysisKind,
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Bootstrap resamples for standard errors.
    #[arg(long)]
    pub bootstrap_iters: Option<usize>,
    #[command(flatten)]
    pub fightin: FightinArgs,
}

/// Fightin' words settings; given flags replace what the bundle recorded.
#[derive(Debug, Args)]
pub struct FightinArgs {
    /// Kind of the weights in `external/weights.tsv` (`count`, `attention_sum`, `attribution_sum`).
    #[arg(long)]
    pub weight_kind: Option<WeightKind>,
    /// Clamp negative attribution weights to zero.
    #[arg(long)]
    pub clamp_negative: bool,
    /// `multiplicity` or `mass_normalize`.
    #[arg(long)]
    pub standardization: Option<Standardization>,
    /// Evaluation multiplicity as `group=n`; repeatable.
    #[arg(long = "multiplicity", value_parser = parse_multiplicity)]
    pub multiplicity: Vec<(String, u64)>,
    /// `uniform` or `informative`.
    #[arg(long)]
    pub prior: Option<PriorKind>,
    /// Total prior mass; defaults to 0.01 per vocabulary word.
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Pairwise comparison as `a:b`; repeatable.
    #[arg(long = "pair", value_parser = parse_pair)]
    pub pairs: Vec<(String, String)>,
}

fn parse_multiplicity(s: &str) -> Result<(String, u64), String> {
    let (g, n) = s.rsplit_once('=').ok_or("expected group=n")?;
    Ok((g.to_string(), n.parse().map_err(|e| format!("{n:?}: {e}"))?))
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    Ok((a.to_string(), b.to_string()))
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment TOML.
    #[arg(long)]
    pub config: PathBuf,
    /// Bundle directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn cache_dir(cli: &Cli) -> PathBuf {
    cli.cache_dir.clone().unwrap_or_else(|| PathBuf::from(".stylus-cache"))
}

fn popularity_client(cli: &Cli) -> Result<PopularityClient> {
    let source: Option<Box<dyn stylus_core::probe_io::PageSource>> =
        if cli.offline { None } else { Some(Box::new(WikipediaSource::new())) };
    Ok(PopularityClient::open(&cache_dir(cli), cli.offline, source)?)
}

fn existing_bundle(b: &BundleArg) -> Result<Bundle> {
    if !b.bundle.join(bundle::MANIFEST).exists() {
        bail!("{} is not a bundle (no {})", b.bundle.display(), bundle::MANIFEST);
    }
    Ok(Bundle::new(&b.bundle))
}

/// Settings recorded in the bundle, or defaults derived from the seed.
fn load_settings(bundle: &Bundle, seed: u64) -> Result<AnalysisSettings> {
    if bundle.path(bundle::ANALYSIS_SETTINGS).exists() {
        return serde_json::from_str(&bundle.read(bundle::ANALYSIS_SETTINGS)?).context("parsing analysis.json");
    }
    let cfg = crate::config::AnalysisConfig::default();
    Ok(AnalysisSettings {
        bootstrap_iters: cfg.bootstrap_iters,
        bootstrap_seed: stylus_core::rng::derive_seed(seed, "bootstrap"),
        scapegoat_top_n: cfg.scapegoat_top_n,
        style_sample_cap: cfg.style_sample_cap,
        style_seed: stylus_core::rng::derive_seed(seed, "style"),
        svg: cfg.svg,
        fightin: None,
    })
}

fn apply_fightin_args(settings: &mut AnalysisSettings, a: &FightinArgs) -> Result<()> {
    let given = a.weight_kind.is_some()
        || a.clamp_negative
        || a.standardization.is_some()
        || !a.multiplicity.is_empty()
        || a.prior.is_some()
        || a.alpha0.is_some()
        || !a.pairs.is_empty();
    if !given {
        return Ok(());
    }
    let f = match (&mut settings.fightin, a.weight_kind) {
        (Some(f), _) => f,
        (None, Some(kind)) => settings.fightin.insert(FightinSettings {
            kind,
            clamp_negative: false,
            standardization: Standardization::default(),
            multiplicity: BTreeMap::new(),
            prior: PriorKind::default(),
            alpha0: None,
            top: 50,
            pairs: Vec::new(),
        }),
        (None, None) => bail!("--weight-kind is required the first time fightin' words runs on a bundle"),
    };
    if let Some(k) = a.weight_kind {
        f.kind = k;
    }
    f.clamp_negative |= a.clamp_negative;
    if let Some(s) = a.standardization {
        f.standardization = s;
    }
    f.multiplicity.extend(a.multiplicity.iter().cloned());
    if let Some(p) = a.prior {
        f.prior = p;
    }
    if a.alpha0.is_some() {
        f.alpha0 = a.alpha0;
    }
    if !a.pairs.is_empty() {
        f.pairs = a.pairs.clone();
    }
    Ok(())
}

fn write_finetune(b: &Bundle, args: &FinetuneArgs) -> Result<()> {
    let task = b.manifest()?.task;
    let samples = match &args.variant {
        Some(v) => {
            let id = VariantKind::parse(v, None)?.id();
            let path = b.variant_path(&id);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}; run perturb first", path.display()))?;
            stylus_core::corpus::parse_samples(&text)?
        }
        None => {
            let all = b.samples()?;
            b.split()?.select(&all, args.split).into_iter().cloned().collect()
        }
    };
    let records = emit_finetune_records(&samples, task, args.style);
    let mut buf = Vec::new();
    write_finetune_jsonl(&mut buf, &records)?;
    bundle::write_file(&args.out, buf)
}

fn read_config(path: &Path) -> Result<(ExperimentConfig, Vec<u8>)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    Ok((ExperimentConfig::load(path)?, bytes))
}

pub fn execute(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global().context("configuring worker threads")?;
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Corpus(CorpusCmd::Build(a)) => {
            pipeline::corpus(&Bundle::new(&a.out), a.task, &a.descriptor, a.text_dir.as_deref(), a.normalization.as_deref())
        }
        Command::Corpus(CorpusCmd::Finetune(a)) => write_finetune(&existing_bundle(&a.bundle)?, a),
        Command::Split(a) => {
            let b = existing_bundle(&a.bundle)?;
            let split_seed = stylus_core::rng::derive_seed(seed, "split");
            let spec = match (a.train, a.val, a.test, a.withheld_test) {
                (Some(train), Some(val), Some(test), Some(withheld)) => SplitSpec {
                    train_per_novel: train,
                    val_per_novel: val,
                    test_per_novel: test,
                    withheld_test_per_novel: withheld,
                    seed: split_seed,
                },
                (None, None, None, None) => SplitSpec::for_task(b.manifest()?.task, split_seed),
                _ => bail!("give all of --train --val --test --withheld-test, or none"),
            };
            pipeline::split(&b, &spec)
        }
        Command::Perturb(a) => {
            let b = existing_bundle(&a.bundle)?;
            let cfg = crate::config::PerturbConfig { variants: a.variants.clone(), propn: a.propn.clone() };
            let propn = a.propn.as_deref().map(PropnSource::parse);
            pipeline::perturb(&b, &cfg.kinds()?, propn.as_ref(), seed)
        }
        Command::Train(a) => {
            let b = existing_bundle(&a.bundle)?;
            let params = ModelParams { mfw: a.mfw, svm_reg: a.svm_reg, svm_epochs: a.svm_epochs };
            pipeline::train(&b, &a.models, params, seed)
        }
        Command::Predict(a) => pipeline::predict(&existing_bundle(a)?),
        Command::Ingest(IngestCmd::Predictions(a)) => {
            let keys = pipeline::ingest_predictions(&existing_bundle(&a.bundle)?, &a.file)?;
            for (m, v) in keys {
                println!("{m}\t{v}");
            }
            Ok(())
        }
        Command::Ingest(IngestCmd::Weights(a)) => {
            pipeline::ingest_weights(&existing_bundle(&a.bundle)?, &a.file, a.kind, a.clamp_negative)
        }
        Command::Ingest(IngestCmd::Embeddings(a)) => pipeline::ingest_embeddings(&existing_bundle(&a.bundle)?, &a.file),
        Command::Ingest(IngestCmd::Popularity(a)) => {
            let b = existing_bundle(&a.bundle)?;
            let mut client = popularity_client(&cli)?;
            if let Some(m) = &a.manual {
                client.add_manual_file(m)?;
            }
            pipeline::ingest_popularity(&b, &mut client)
        }
        Command::Analyze(a) => {
            let b = existing_bundle(&a.bundle)?;
            let mut settings = load_settings(&b, seed)?;
            if let Some(n) = a.bootstrap_iters {
                if n == 0 {
                    bail!("--bootstrap-iters must be at least 1");
                }
                settings.bootstrap_iters = n;
            }
            apply_fightin_args(&mut settings, &a.fightin)?;
            if a.kind == AnalysisKind::Fightin && settings.fightin.is_none() {
                bail!("no fightin' words settings in the bundle; pass --weight-kind");
            }
            pipeline::write_analysis_settings(&b, &settings)?;
            let ctx = analyze::BundleData::load(b)?;
            print!("{}", analyze::run(&ctx, a.kind)?);
            Ok(())
        }
        Command::Report(a) => {
            let b = existing_bundle(a)?;
            if !b.path(bundle::ANALYSIS_SETTINGS).exists() {
                pipeline::write_analysis_settings(&b, &load_settings(&b, seed)?)?;
            }
            analyze::report(&analyze::BundleData::load(b)?)
        }
        Command::Run(a) => {
            let (mut cfg, bytes) = read_config(&a.config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let out = a
                .out
                .clone()
                .or_else(|| cfg.output_dir.clone())
                .context("no bundle directory: pass --out or set output_dir in the config")?;
            let page_source: Option<Box<dyn stylus_core::probe_io::PageSource>> =
                if cli.offline { None } else { Some(Box::new(WikipediaSource::new())) };
            let opts = RunOptions { offline: cli.offline, cache_dir: cache_dir(&cli), page_source };
            pipeline::run(&cfg, &bytes, &out, opts)?;
            eprintln!("report written to {}", out.join(bundle::REPORT).display());
            Ok(())
        }
    }
}

