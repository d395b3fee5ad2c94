//! Raw text to accuracy through the public API only.

use stylus_core::analysis::{accuracy_report, confusion_matrix};
use stylus_core::classify::{build_delta_profiles, train_svm, Predicted, PredictionRecord, StyleClassifier, SvmParams};
use stylus_core::corpus::{build_manifest, filter_samples, normalize_text, segment_sentences, NovelDoc, Sample};
use stylus_core::perturb::{apply_variant, StopwordLexicon, VariantKind, VariantSpec};
use stylus_core::splitter::{assign_splits, Split, SplitSpec};
use stylus_core::Task;

fn novel_text(words: &[&str], sentences: usize) -> String {
    let shared = ["the", "of", "and", "a", "to", "in", "was", "her", "his", "it"];
    (0..sentences)
        .map(|s| {
            let body: Vec<&str> = (0..22)
                .map(|w| if w % 3 == 0 { shared[(s + w) % shared.len()] } else { words[(s * 5 + w * 3) % words.len()] })
                .collect();
            let mut body = body.join(" ");
            body[..1].make_ascii_uppercase();
            // Curly quotes and a dash exercise normalization.
            format!("\u{201c}{body}\u{201d} \u{2014} she said.")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn doc(id: &str, label: &str, words: &[&str], withheld: bool) -> NovelDoc {
    NovelDoc {
        novel_id: id.into(),
        class_label: label.into(),
        title: id.into(),
        year: 1860,
        raw_text: novel_text(words, 40),
        withheld,
    }
}

#[test]
fn raw_text_to_accuracy() {
    let moors = ["moor", "wind", "heather", "grave", "wild", "storm", "crag"];
    let parlours = ["parlour", "teacup", "ribbon", "visit", "polite", "lace", "piano"];
    let novels = vec![
        doc("m1", "Moors", &moors, false),
        doc("m2", "Moors", &moors, true),
        doc("p1", "Parlours", &parlours, false),
        doc("p2", "Parlours", &parlours, true),
    ];
    let mut samples: Vec<Sample> = Vec::new();
    for n in &novels {
        let text = normalize_text(&n.raw_text);
        assert!(!text.contains('\u{201c}'));
        let got = filter_samples(&segment_sentences(&text), n);
        assert_eq!(got.len(), 40, "{}", n.novel_id);
        samples.extend(got);
    }
    let manifest = build_manifest(Task::Genre, &novels, &samples).unwrap();
    let spec = SplitSpec { train_per_novel: 20, val_per_novel: 5, test_per_novel: 10, withheld_test_per_novel: 10, seed: 1 };
    let split = assign_splits(&manifest, &samples, &spec).unwrap();
    assert_eq!((split.count(Split::Train), split.count(Split::Test)), (40, 40));

    let train: Vec<&Sample> = samples.iter().filter(|s| split.get(&s.sample_id) == Some(Split::Train)).collect();
    let test: Vec<&Sample> = samples.iter().filter(|s| split.get(&s.sample_id) == Some(Split::Test)).collect();
    assert!(train.iter().all(|s| !s.from_withheld_novel));

    let classes = vec!["Moors".to_string(), "Parlours".to_string()];
    let delta = build_delta_profiles(&train, &classes, 50).unwrap();
    let svm = train_svm(&train, SvmParams { seed: 2, ..SvmParams::default() }).unwrap();
    let lexicon = StopwordLexicon::default();
    let variant = VariantSpec::new(VariantKind::Lowercase, 3);

    // Each class's own training text comes back as that class. Delta on
    // single short samples is weak when shared words differ by noise only.
    for c in &classes {
        let text: Vec<&str> = train.iter().filter(|s| &s.class_label == c).map(|s| s.text.as_str()).collect();
        assert_eq!(&delta.predict_text(&text.join(" ")).label, c);
    }

    let model: &dyn StyleClassifier = &svm;
    let preds: Vec<PredictionRecord> = test
        .iter()
        .map(|s| {
            let text = apply_variant(s, &variant, &lexicon, None).unwrap();
            PredictionRecord {
                sample_id: s.sample_id.clone(),
                model_id: model.model_id().into(),
                variant_id: variant.kind.id(),
                predicted: Predicted::classify(&model.predict(&s.sample_id, &text).label, &classes),
                true_label: s.class_label.clone(),
                from_withheld_novel: s.from_withheld_novel,
            }
        })
        .collect();
    let report = accuracy_report(&preds, 100, 4).unwrap();
    assert_eq!(report.overall.accuracy, 1.0, "{}", model.model_id());
    let cm = confusion_matrix(&preds, &classes);
    assert_eq!(cm.counts.iter().flatten().sum::<usize>(), 40);
    assert_eq!(cm.counts[0][1] + cm.counts[1][0], 0);
}
