//! Analyses computed from a bundle's contents alone, so that a bundle can be
//! re-analysed later with identical output.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use stylus_core::analysis::report::{
    accuracy_csv, confusion_csv, correlation_csv, embsim_csv, fightin_csv, format_p, markdown_table, out_of_set_csv,
    scapegoat_csv, style_metrics_csv, svg_bar_chart, svg_scatter,
};
use stylus_core::analysis::{
    accuracy_report, build_average_table, class_style_metrics, confusion_matrix, embedding_similarity_scores,
    fightin_words, one_vs_rest_fightin, pearson, scapegoat_shares, AccuracyReport, AnalysisError, ClassStyleMetrics,
    FightinWordsResult, PriorKind,
};
use stylus_core::classify::PredictionRecord;
use stylus_core::corpus::{CorpusManifest, Sample};
use stylus_core::perturb::{count_stopwords, StopCategory, StopwordLexicon};
use stylus_core::probe_io::{
    parse_embeddings, parse_weight_triples, NegativePolicy, Standardization, WeightKind, EmbeddingTable,
};
use stylus_core::rng::derive_seed;
use stylus_core::splitter::Split;

use crate::bundle::{self, file_stem, Bundle};

/// Everything the analyses need besides bundle data. Stored in the bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub bootstrap_iters: usize,
    pub bootstrap_seed: u64,
    pub scapegoat_top_n: usize,
    pub style_sample_cap: usize,
    pub style_seed: u64,
    pub svg: bool,
    pub fightin: Option<FightinSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FightinSettings {
    pub kind: WeightKind,
    pub clamp_negative: bool,
    pub standardization: Standardization,
    pub multiplicity: BTreeMap<String, u64>,
    pub prior: PriorKind,
    pub alpha0: Option<f64>,
    pub top: usize,
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AnalysisKind {
    Accuracy,
    Confusion,
    Scapegoat,
    Style,
    Fightin,
    Embsim,
    Correlate,
}

impl AnalysisKind {
    pub const ALL: [AnalysisKind; 7] = [
        AnalysisKind::Accuracy,
        AnalysisKind::Confusion,
        AnalysisKind::Scapegoat,
        AnalysisKind::Style,
        AnalysisKind::Fightin,
        AnalysisKind::Embsim,
        AnalysisKind::Correlate,
    ];
}

type PredKey = (String, String);

pub struct BundleData {
    pub bundle: Bundle,
    pub settings: AnalysisSettings,
    pub manifest: CorpusManifest,
    pub samples: Vec<Sample>,
    pub test_ids: HashSet<String>,
    pub train: Vec<Sample>,
    pub predictions: BTreeMap<PredKey, Vec<PredictionRecord>>,
}

impl BundleData {
    pub fn load(bundle: Bundle) -> Result<Self> {
        let settings: AnalysisSettings =
            serde_json::from_str(&bundle.read(bundle::ANALYSIS_SETTINGS)?).context("parsing analysis.json")?;
        let manifest = bundle.manifest()?;
        let samples = bundle.samples()?;
        let split = bundle.split()?;
        let test_ids = samples
            .iter()
            .filter(|s| split.get(&s.sample_id) == Some(Split::Test))
            .map(|s| s.sample_id.clone())
            .collect();
        let train = split.select(&samples, Split::Train).into_iter().cloned().collect();
        let predictions = bundle.predictions(&manifest.classes)?;
        Ok(BundleData { bundle, settings, manifest, samples, test_ids, train, predictions })
    }

    fn accuracy_for(&self, key: &PredKey) -> Result<AccuracyReport> {
        let seed = derive_seed(self.settings.bootstrap_seed, &format!("{}/{}", key.0, key.1));
        Ok(accuracy_report(&self.predictions[key], self.settings.bootstrap_iters, seed)?)
    }

    fn accuracies(&self) -> Result<BTreeMap<PredKey, AccuracyReport>> {
        self.predictions.keys().map(|k| Ok((k.clone(), self.accuracy_for(k)?))).collect()
    }

    fn models(&self) -> Vec<String> {
        let mut m: Vec<String> = self.predictions.keys().map(|k| k.0.clone()).collect();
        m.dedup();
        m
    }

    fn style_metrics(&self) -> Vec<ClassStyleMetrics> {
        let refs: Vec<&Sample> = self.train.iter().collect();
        class_style_metrics(&refs, self.settings.style_sample_cap, self.settings.style_seed)
    }
}

fn stem(key: &PredKey) -> String {
    format!("{}__{}", file_stem(&key.0), file_stem(&key.1))
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Runs one analysis, writing its files, and returns its report section.
pub fn run(ctx: &BundleData, kind: AnalysisKind) -> Result<String> {
    match kind {
        AnalysisKind::Accuracy => accuracy(ctx),
        AnalysisKind::Confusion => confusion(ctx),
        AnalysisKind::Scapegoat => scapegoat(ctx),
        AnalysisKind::Style => style(ctx),
        AnalysisKind::Fightin => fightin(ctx),
        AnalysisKind::Embsim => embsim(ctx),
        AnalysisKind::Correlate => correlate(ctx),
    }
}

/// Regenerates every analysis and `report.md`.
pub fn report(ctx: &BundleData) -> Result<()> {
    let mut md = String::new();
    let task = ctx.manifest.task;
    let _ = writeln!(md, "# Stylometry report: {task} task\n");
    let _ = writeln!(
        md,
        "{} novels, {} classes, {} samples ({} train, {} test).\n",
        ctx.manifest.novels.len(),
        ctx.manifest.classes.len(),
        ctx.samples.len(),
        ctx.train.len(),
        ctx.test_ids.len()
    );
    if !ctx.manifest.warnings.is_empty() {
        let _ = writeln!(md, "Novels below the usual inclusion threshold:\n");
        for w in &ctx.manifest.warnings {
            let _ = writeln!(md, "- {}: {} samples (threshold {})", w.novel_id, w.samples, w.threshold);
        }
        md.push('\n');
    }
    for kind in AnalysisKind::ALL {
        md.push_str(&run(ctx, kind)?);
    }
    ctx.bundle.write(bundle::REPORT, md)
}

fn accuracy(ctx: &BundleData) -> Result<String> {
    let reports = ctx.accuracies()?;
    let mut rows = Vec::new();
    let mut md_rows = Vec::new();
    for (key, r) in &reports {
        ctx.bundle.write(format!("{}/accuracy/{}.csv", bundle::ANALYSIS_DIR, stem(key)), accuracy_csv(r))?;
        let cell = |c: &Option<stylus_core::analysis::AccuracyCell>| match c {
            Some(c) => [c.n.to_string(), format!("{:.6}", c.accuracy), format!("{:.6}", c.se)],
            None => [String::from("0"), String::new(), String::new()],
        };
        let mut row = vec![key.0.clone(), key.1.clone(), r.overall.n.to_string(), format!("{:.6}", r.overall.accuracy), format!("{:.6}", r.overall.se)];
        row.extend(cell(&r.in_training));
        row.extend(cell(&r.withheld));
        rows.push(row);
        let fmt = |c: &Option<stylus_core::analysis::AccuracyCell>| {
            c.as_ref().map_or("n/a".to_string(), |c| format!("{} (SE {})", pct(c.accuracy), pct(c.se)))
        };
        md_rows.push(vec![
            key.0.clone(),
            key.1.clone(),
            r.overall.n.to_string(),
            format!("{} (SE {})", pct(r.overall.accuracy), pct(r.overall.se)),
            fmt(&r.in_training),
            fmt(&r.withheld),
        ]);
    }
    let mut w = String::from("model,variant,n,accuracy,se,in_training_n,in_training_accuracy,in_training_se,withheld_n,withheld_accuracy,withheld_se\n");
    for r in rows {
        w.push_str(&r.join(","));
        w.push('\n');
    }
    ctx.bundle.write(format!("{}/accuracy_summary.csv", bundle::ANALYSIS_DIR), w)?;
    if ctx.settings.svg {
        for model in ctx.models() {
            let bars: Vec<(String, f64, Option<f64>)> = reports
                .iter()
                .filter(|(k, _)| k.0 == model)
                .map(|(k, r)| (k.1.clone(), r.overall.accuracy, Some(r.overall.se)))
                .collect();
            ctx.bundle.write(
                format!("{}/accuracy_{}.svg", bundle::ANALYSIS_DIR, file_stem(&model)),
                svg_bar_chart(&format!("{model}: accuracy by variant"), &bars, 1.0),
            )?;
        }
    }
    let chance = 1.0 / ctx.manifest.classes.len().max(1) as f64;
    let undefined = reports.values().any(|r| !r.se_defined);
    let mut md = format!(
        "## Accuracy\n\nAccuracy in percent with bootstrap standard errors over {} resamples{}. Chance level is {}%.\n\n",
        ctx.settings.bootstrap_iters,
        if undefined { " (a single resample leaves the SE undefined; shown as 0)" } else { "" },
        pct(chance)
    );
    md.push_str(&markdown_table(&["model", "variant", "n", "overall", "in-training novels", "withheld novels"], &md_rows));
    md.push('\n');
    Ok(md)
}

fn confusion(ctx: &BundleData) -> Result<String> {
    let mut md = String::from("## Confusion matrices\n\nRows are true labels. Percentages ignore answers outside the label set; the `_full` files add them as a last column.\n\n");
    let mut any_oos = false;
    for (key, preds) in &ctx.predictions {
        let m = confusion_matrix(preds, &ctx.manifest.classes);
        let base = format!("{}/confusion/{}", bundle::ANALYSIS_DIR, stem(key));
        ctx.bundle.write(format!("{base}.csv"), confusion_csv(&m, true))?;
        ctx.bundle.write(format!("{base}_full.csv"), confusion_csv(&m, false))?;
        if !m.out_of_set_strings.is_empty() {
            any_oos = true;
            ctx.bundle.write(format!("{base}_out_of_set.csv"), out_of_set_csv(&m))?;
            let total: usize = m.out_of_set.iter().sum();
            let _ = writeln!(md, "- {} / {}: {} answers outside the label set ({} distinct).", key.0, key.1, total, m.out_of_set_strings.len());
        }
    }
    if !any_oos {
        md.push_str("No answers fell outside the label set.\n");
    }
    md.push('\n');
    Ok(md)
}

fn scapegoat(ctx: &BundleData) -> Result<String> {
    let top_n = ctx.settings.scapegoat_top_n;
    let mut md = format!("## Scapegoating\n\nShare of misattributions claimed by the top {top_n} receiving classes.\n\n");
    let mut rows = Vec::new();
    for (key, preds) in &ctx.predictions {
        match scapegoat_shares(preds, top_n) {
            Ok(s) => {
                ctx.bundle.write(format!("{}/scapegoat/{}.csv", bundle::ANALYSIS_DIR, stem(key)), scapegoat_csv(&s))?;
                let mut row = vec![key.0.clone(), key.1.clone(), s.total_misattributions.to_string()];
                row.push(s.ranking.first().map(|r| r.0.clone()).unwrap_or_default());
                row.extend(s.cumulative.iter().map(|c| format!("{c:.1}")));
                rows.push(row);
            }
            Err(AnalysisError::NoMisattributions) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if rows.is_empty() {
        md.push_str("No misattributions.\n\n");
        return Ok(md);
    }
    let mut header: Vec<String> = vec!["model".into(), "variant".into(), "errors".into(), "top class".into()];
    header.extend((1..=top_n).map(|n| format!("top {n} %")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    md.push_str(&markdown_table(&header, &rows));
    md.push('\n');
    Ok(md)
}

fn style(ctx: &BundleData) -> Result<String> {
    let metrics = ctx.style_metrics();
    ctx.bundle.write(format!("{}/style_metrics.csv", bundle::ANALYSIS_DIR), style_metrics_csv(&metrics))?;
    let mut md = String::from("## Vocabulary and uniqueness\n\n");
    let Some(first) = metrics.first() else {
        md.push_str("No training samples.\n\n");
        return Ok(md);
    };
    let _ = writeln!(
        md,
        "Computed on {} training samples per class; uniqueness metric `{}`.\n",
        first.samples_used, first.metric_version
    );
    let rows: Vec<Vec<String>> = metrics
        .iter()
        .map(|m| vec![m.class_label.clone(), m.vocab_size.to_string(), format!("{:.2}", m.uniqueness)])
        .collect();
    md.push_str(&markdown_table(&["class", "vocabulary", "uniqueness"], &rows));
    md.push('\n');
    Ok(md)
}

fn weights_matrix(ctx: &BundleData, f: &FightinSettings) -> Result<stylus_core::probe_io::WeightMatrix> {
    let text = ctx.bundle.read(bundle::EXTERNAL_WEIGHTS)?;
    let policy = if f.clamp_negative { NegativePolicy::Clamp } else { NegativePolicy::Reject };
    let (m, _) = parse_weight_triples(&text, f.kind, policy).context("parsing external/weights.tsv")?;
    let mut mult = f.multiplicity.clone();
    for g in &m.groups {
        mult.entry(g.clone()).or_insert(1);
    }
    Ok(f.standardization.apply(&m, &mult)?)
}

fn top_tokens(r: &FightinWordsResult, n: usize) -> (String, String) {
    let pos: Vec<&str> = r.tokens.iter().filter(|t| t.z > 0.0).take(n).map(|t| t.token.as_str()).collect();
    let neg: Vec<&str> = r.tokens.iter().rev().filter(|t| t.z < 0.0).take(n).map(|t| t.token.as_str()).collect();
    (pos.join(" "), neg.join(" "))
}

fn fightin(ctx: &BundleData) -> Result<String> {
    let Some(f) = &ctx.settings.fightin else {
        return Ok(String::new());
    };
    let m = weights_matrix(ctx, f)?;
    let prior = match f.prior {
        PriorKind::Uniform => "uniform",
        PriorKind::Informative => "informative",
    };
    let mut md = format!(
        "## Distinctive tokens\n\nWeighted log-odds ({prior} Dirichlet prior) over `{}` weights, rows standardized by `{}`.\n\n",
        f.kind,
        f.standardization.as_str()
    );
    let mut results = Vec::new();
    if m.groups.len() >= 2 {
        for g in &m.groups {
            results.push(one_vs_rest_fightin(&m, g, f.alpha0, f.prior)?);
        }
    }
    for (a, b) in &f.pairs {
        results.push(fightin_words(&m, a, b, f.alpha0, f.prior)?);
    }
    let mut rows = Vec::new();
    for r in &results {
        let name = format!("{}__vs__{}", file_stem(&r.group_i), file_stem(&r.group_j));
        ctx.bundle.write(format!("{}/fightin/{name}.csv", bundle::ANALYSIS_DIR), fightin_csv(r))?;
        let (pos, neg) = top_tokens(r, 10.min(f.top));
        rows.push(vec![format!("{} vs {}", r.group_i, r.group_j), pos, neg]);
    }
    md.push_str(&markdown_table(&["comparison", "most distinctive of first", "most distinctive of second"], &rows));
    md.push('\n');
    Ok(md)
}

fn embedding_scores(ctx: &BundleData) -> Result<Option<Vec<stylus_core::analysis::EmbeddingSimilarityScores>>> {
    let path = ctx.bundle.path(bundle::EXTERNAL_EMBEDDINGS);
    if !path.exists() {
        return Ok(None);
    }
    let set = parse_embeddings(&ctx.bundle.read(bundle::EXTERNAL_EMBEDDINGS)?).context("parsing external/embeddings.jsonl")?;
    let classes: Vec<&EmbeddingTable> = set.classes.values().collect();
    if classes.is_empty() {
        return Ok(Some(Vec::new()));
    }
    let avg = build_average_table(&classes)?;
    Ok(Some(embedding_similarity_scores(&classes, &avg, &set.excerpts_by_owner())?))
}

fn embsim(ctx: &BundleData) -> Result<String> {
    let Some(scores) = embedding_scores(ctx)? else {
        return Ok(String::new());
    };
    ctx.bundle.write(format!("{}/embsim.csv", bundle::ANALYSIS_DIR), embsim_csv(&scores))?;
    let rows: Vec<Vec<String>> = scores
        .iter()
        .map(|s| {
            vec![
                s.class_label.clone(),
                format!("{:.4}", s.train_vs_average),
                s.test_vs_train.map_or("n/a".into(), |v| format!("{v:.4}")),
            ]
        })
        .collect();
    let mut md = String::from("## Contextual embedding similarity\n\n");
    md.push_str(&markdown_table(&["class", "train vs average", "test vs train"], &rows));
    md.push('\n');
    Ok(md)
}

/// Per-class accuracy on the normal variant for each model.
fn class_accuracies(ctx: &BundleData) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    let mut out = BTreeMap::new();
    for key in ctx.predictions.keys().filter(|k| k.1 == "normal") {
        let r = ctx.accuracy_for(key)?;
        out.insert(key.0.clone(), r.by_class.iter().map(|(c, a)| (c.clone(), a.accuracy)).collect());
    }
    Ok(out)
}

struct Correlated {
    name: String,
    axes: (String, String),
    points: Vec<(String, f64, f64)>,
}

fn masked_count_series(ctx: &BundleData) -> Result<Vec<Correlated>> {
    let lexicon = StopwordLexicon::default();
    let test: Vec<&Sample> = ctx.samples.iter().filter(|s| ctx.test_ids.contains(&s.sample_id)).collect();
    let mut out = Vec::new();
    for model in ctx.models() {
        for scope in ["overall", "in_training", "withheld"] {
            let mut points = Vec::new();
            for cat in StopCategory::parts_of_speech() {
                let key = (model.clone(), format!("stop_{cat}"));
                let Some(preds) = ctx.predictions.get(&key) else { continue };
                let keep = |withheld: bool| match scope {
                    "in_training" => !withheld,
                    "withheld" => withheld,
                    _ => true,
                };
                let scoped: Vec<&PredictionRecord> = preds.iter().filter(|p| keep(p.from_withheld_novel)).collect();
                let members: Vec<&&Sample> = test.iter().filter(|s| keep(s.from_withheld_novel)).collect();
                if scoped.is_empty() || members.is_empty() {
                    continue;
                }
                let acc = scoped.iter().filter(|p| p.is_correct()).count() as f64 / scoped.len() as f64;
                let masked = members.iter().map(|s| count_stopwords(&s.text, *cat, &lexicon)).sum::<usize>() as f64
                    / members.len() as f64;
                points.push((key.1, masked, acc));
            }
            out.push(Correlated {
                name: format!("masked_count__{}__{scope}", file_stem(&model)),
                axes: ("mean_masked_per_sample".into(), "accuracy".into()),
                points,
            });
        }
    }
    Ok(out)
}

fn per_class_series(ctx: &BundleData, what: &str, values: &BTreeMap<String, f64>) -> Result<Vec<Correlated>> {
    Ok(class_accuracies(ctx)?
        .into_iter()
        .map(|(model, acc)| Correlated {
            name: format!("{what}__{}", file_stem(&model)),
            axes: (what.to_string(), "class_accuracy".into()),
            points: values.iter().filter_map(|(c, v)| acc.get(c).map(|a| (c.clone(), *v, *a))).collect(),
        })
        .collect())
}

fn correlate(ctx: &BundleData) -> Result<String> {
    let mut series = masked_count_series(ctx)?;
    let metrics = ctx.style_metrics();
    let uniq: BTreeMap<String, f64> = metrics.iter().map(|m| (m.class_label.clone(), m.uniqueness)).collect();
    let vocab: BTreeMap<String, f64> = metrics.iter().map(|m| (m.class_label.clone(), m.vocab_size as f64)).collect();
    series.extend(per_class_series(ctx, "uniqueness", &uniq)?);
    series.extend(per_class_series(ctx, "vocab_size", &vocab)?);
    if ctx.bundle.path(bundle::EXTERNAL_POPULARITY).exists() {
        let pop = parse_popularity(&ctx.bundle.read(bundle::EXTERNAL_POPULARITY)?)?;
        series.extend(per_class_series(ctx, "wiki_chars", &pop)?);
    }
    if let Some(scores) = embedding_scores(ctx)? {
        let tva: BTreeMap<String, f64> = scores.iter().map(|s| (s.class_label.clone(), s.train_vs_average)).collect();
        let tvt: BTreeMap<String, f64> =
            scores.iter().filter_map(|s| s.test_vs_train.map(|v| (s.class_label.clone(), v))).collect();
        series.extend(per_class_series(ctx, "embsim_train_vs_average", &tva)?);
        series.extend(per_class_series(ctx, "embsim_test_vs_train", &tvt)?);
    }

    let mut rows = Vec::new();
    for s in &series {
        let xs: Vec<f64> = s.points.iter().map(|p| p.1).collect();
        let ys: Vec<f64> = s.points.iter().map(|p| p.2).collect();
        match pearson(&xs, &ys) {
            Ok(c) => {
                let base = format!("{}/correlations/{}", bundle::ANALYSIS_DIR, s.name);
                ctx.bundle.write(format!("{base}.csv"), correlation_csv((&s.axes.0, &s.axes.1), &s.points, &c))?;
                if ctx.settings.svg {
                    ctx.bundle.write(format!("{base}.svg"), svg_scatter(&s.name, (&s.axes.0, &s.axes.1), &s.points))?;
                }
                rows.push(vec![s.name.clone(), c.n.to_string(), format!("{:.3}", c.r), format_p(c.p)]);
            }
            Err(AnalysisError::TooFewPoints(_) | AnalysisError::DegenerateInput(_)) => {
                rows.push(vec![s.name.clone(), s.points.len().to_string(), "n/a".into(), "too few or constant points".into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut md = String::from("## Correlations\n\nPearson's r with two-sided p-values.\n\n");
    if rows.is_empty() {
        md.push_str("Nothing to correlate.\n\n");
    } else {
        md.push_str(&markdown_table(&["series", "n", "r", "p"], &rows));
        md.push('\n');
    }
    Ok(md)
}

/// `author,chars` as stored in the bundle.
pub fn parse_popularity(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let (author, chars) = line
            .rsplit_once(',')
            .with_context(|| format!("external/popularity.csv line {}: expected author,chars", i + 1))?;
        let chars: u64 = chars.parse().with_context(|| format!("external/popularity.csv line {}", i + 1))?;
        out.insert(author.trim_matches('"').replace("\"\"", "\""), chars as f64);
    }
    Ok(out)
}
