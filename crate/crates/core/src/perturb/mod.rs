//! Text ablations applied to samples.
//!
//! Variants operate on whitespace tokens. Stop-word matching looks at a
//! token's core (the token without leading and trailing non-alphanumeric
//! characters); when the whole core is not a stop word the token is split at
//! apostrophes and each part's core is checked on its own, so `bed's`
//! becomes `bed'<STOP>`. Mask placeholders (`<STOP>`, `<PROPN>`) are opaque
//! to every later step: they are never re-masked, lowercased or stripped.

mod lexicon;
mod propn;

pub use lexicon::{StopCategory, StopwordLexicon};
pub use propn::{heuristic_propn, parse_propn_annotations, PropnAnnotation, PropnEvidence, Span, COMMON_CAPITALIZED};

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sample;
use crate::rng::{derive_seed, SplitMix64};

pub const STOP_TOKEN: &str = "<STOP>";
pub const PROPN_TOKEN: &str = "<PROPN>";
const PLACEHOLDERS: [&str; 2] = [STOP_TOKEN, PROPN_TOKEN];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PerturbError {
    #[error("sample {0:?} has no proper-noun annotation")]
    MissingAnnotation(String),
    #[error("sample {sample_id:?}: invalid span {start}..{end}: {reason}")]
    InvalidSpan { sample_id: String, start: usize, end: usize, reason: &'static str },
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantKind {
    Normal,
    Lowercase,
    NoPunctuation,
    MaskStopwords(StopCategory),
    Shuffle,
    MaskPropn,
    MaskRandomMatched,
    AllModifications,
}

impl VariantKind {
    /// Stable identifier used in file names and prediction records.
    pub fn id(&self) -> String {
        match self {
            VariantKind::Normal => "normal".into(),
            VariantKind::Lowercase => "lowercase".into(),
            VariantKind::NoPunctuation => "no_punctuation".into(),
            VariantKind::MaskStopwords(c) => format!("stop_{c}"),
            VariantKind::Shuffle => "shuffle".into(),
            VariantKind::MaskPropn => "no_propn".into(),
            VariantKind::MaskRandomMatched => "random_matched".into(),
            VariantKind::AllModifications => "all_modifications".into(),
        }
    }

    /// Parses either a variant id (`stop_pronoun`) or a kind name with an
    /// optional category (`mask_stopwords` + `pronoun`).
    pub fn parse(kind: &str, category: Option<&str>) -> Result<Self, PerturbError> {
        let unknown = || PerturbError::UnknownVariant(kind.to_string());
        let cat = |c: &str| c.parse::<StopCategory>().map_err(|_| PerturbError::UnknownVariant(format!("{kind}:{c}")));
        let k = match kind {
            "normal" => VariantKind::Normal,
            "lowercase" => VariantKind::Lowercase,
            "no_punctuation" => VariantKind::NoPunctuation,
            "shuffle" => VariantKind::Shuffle,
            "mask_propn" | "no_propn" => VariantKind::MaskPropn,
            "mask_random_matched" | "random_matched" => VariantKind::MaskRandomMatched,
            "all_modifications" | "all" => VariantKind::AllModifications,
            "mask_stopwords" => VariantKind::MaskStopwords(cat(category.unwrap_or("all"))?),
            other => match other.strip_prefix("stop_") {
                Some(c) => VariantKind::MaskStopwords(cat(c)?),
                None => return Err(unknown()),
            },
        };
        if category.is_some() && !matches!(k, VariantKind::MaskStopwords(_)) {
            return Err(PerturbError::UnknownVariant(format!("{kind} takes no category")));
        }
        Ok(k)
    }

    pub fn needs_propn(&self) -> bool {
        matches!(self, VariantKind::MaskPropn | VariantKind::AllModifications)
    }

    /// Every variant in the standard ablation grid.
    pub fn standard_grid() -> Vec<VariantKind> {
        let mut v = vec![VariantKind::Normal, VariantKind::Lowercase, VariantKind::NoPunctuation];
        v.extend(StopCategory::ALL_CATEGORIES.iter().map(|&c| VariantKind::MaskStopwords(c)));
        v.extend([VariantKind::Shuffle, VariantKind::MaskPropn, VariantKind::MaskRandomMatched, VariantKind::AllModifications]);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub kind: VariantKind,
    /// Only consulted by shuffle, random masking and the combined variant.
    pub seed: u64,
}

impl VariantSpec {
    pub fn new(kind: VariantKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}')
}

/// Byte range of `s[range]` without leading/trailing non-alphanumerics.
fn core_range(s: &str, range: Range<usize>) -> Option<Range<usize>> {
    let part = &s[range.clone()];
    let lead = part.len() - part.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
    let trail = part.len() - part.trim_end_matches(|c: char| !c.is_alphanumeric()).len();
    (lead + trail < part.len()).then(|| range.start + lead..range.end - trail)
}

fn contains_placeholder(s: &str) -> bool {
    PLACEHOLDERS.iter().any(|p| s.contains(p))
}

/// Apostrophe-delimited parts of a token, as byte ranges.
fn apostrophe_parts(token: &str) -> Vec<Range<usize>> {
    let mut parts = Vec::new();
    let mut start = 0;
    for (i, c) in token.char_indices() {
        if is_apostrophe(c) {
            parts.push(start..i);
            start = i + c.len_utf8();
        }
    }
    parts.push(start..token.len());
    parts
}

/// Word cores of a token that can be masked, as byte ranges.
fn word_parts(token: &str) -> Vec<Range<usize>> {
    apostrophe_parts(token)
        .into_iter()
        .filter(|r| !contains_placeholder(&token[r.clone()]))
        .filter_map(|r| core_range(token, r))
        .collect()
}

/// Ranges of a token that `category` masks: the whole core if it is a stop
/// word, otherwise each matching apostrophe part.
fn stop_ranges(token: &str, category: StopCategory, lexicon: &StopwordLexicon) -> Vec<Range<usize>> {
    if !contains_placeholder(token) {
        if let Some(core) = core_range(token, 0..token.len()) {
            if lexicon.contains(category, &token[core.clone()].to_lowercase()) {
                return vec![core];
            }
        }
    }
    word_parts(token)
        .into_iter()
        .filter(|r| lexicon.contains(category, &token[r.clone()].to_lowercase()))
        .collect()
}

fn replace_ranges(token: &str, ranges: &[Range<usize>], with: &str) -> String {
    let mut out = String::with_capacity(token.len() + ranges.len() * with.len());
    let mut last = 0;
    for r in ranges {
        out.push_str(&token[last..r.start]);
        out.push_str(with);
        last = r.end;
    }
    out.push_str(&token[last..]);
    out
}

/// Rewrites each whitespace token in place, preserving the whitespace.
fn map_tokens(text: &str, mut f: impl FnMut(usize, &str) -> String) -> String {
    let mut out = String::with_capacity(text.len());
    let mut idx = 0;
    let mut rest = text;
    while !rest.is_empty() {
        let ws = rest.len() - rest.trim_start().len();
        out.push_str(&rest[..ws]);
        rest = &rest[ws..];
        if rest.is_empty() {
            break;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        out.push_str(&f(idx, &rest[..end]));
        idx += 1;
        rest = &rest[end..];
    }
    out
}

/// Splits text into placeholder and non-placeholder segments.
fn placeholder_segments(text: &str) -> Vec<(&str, bool)> {
    let mut out = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let next = PLACEHOLDERS
            .iter()
            .filter_map(|p| rest.find(p).map(|i| (i, p.len())))
            .min();
        match next {
            Some((i, len)) => {
                if i > 0 {
                    out.push((&rest[..i], false));
                }
                out.push((&rest[i..i + len], true));
                rest = &rest[i + len..];
            }
            None => {
                out.push((rest, false));
                break;
            }
        }
    }
    out
}

pub fn lowercase(text: &str) -> String {
    placeholder_segments(text)
        .into_iter()
        .map(|(s, ph)| if ph { s.to_string() } else { s.to_lowercase() })
        .collect()
}

/// Deletes every character that is neither alphanumeric nor whitespace
/// (placeholders excepted) and rejoins the surviving tokens with single
/// spaces.
pub fn remove_punctuation(text: &str) -> String {
    text.split_whitespace()
        .map(|tok| {
            placeholder_segments(tok)
                .into_iter()
                .map(|(s, ph)| if ph { s.to_string() } else { s.chars().filter(|c| c.is_alphanumeric()).collect() })
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn mask_stopwords(text: &str, category: StopCategory, lexicon: &StopwordLexicon) -> String {
    map_tokens(text, |_, tok| replace_ranges(tok, &stop_ranges(tok, category, lexicon), STOP_TOKEN))
}

/// Number of word parts `mask_stopwords(category)` replaces.
pub fn count_stopwords(text: &str, category: StopCategory, lexicon: &StopwordLexicon) -> usize {
    text.split_whitespace().map(|t| stop_ranges(t, category, lexicon).len()).sum()
}

pub fn stopword_count(sample: &Sample, category: StopCategory, lexicon: &StopwordLexicon) -> usize {
    count_stopwords(&sample.text, category, lexicon)
}

/// Uniform seeded permutation of whitespace tokens, joined by single spaces.
pub fn shuffle_tokens(text: &str, seed: u64) -> String {
    let mut toks: Vec<&str> = text.split_whitespace().collect();
    SplitMix64::new(seed).shuffle(&mut toks);
    toks.join(" ")
}

/// Masks `k` word parts chosen uniformly without replacement, where `k` is
/// the number of `all`-category stop words in the text.
pub fn mask_random_matched(text: &str, lexicon: &StopwordLexicon, seed: u64) -> String {
    let k = count_stopwords(text, StopCategory::All, lexicon);
    let mut positions: Vec<(usize, Range<usize>)> = Vec::new();
    for (ti, tok) in text.split_whitespace().enumerate() {
        positions.extend(word_parts(tok).into_iter().map(|r| (ti, r)));
    }
    let mut chosen: Vec<(usize, Range<usize>)> = SplitMix64::new(seed)
        .sample_indices(positions.len(), k.min(positions.len()))
        .into_iter()
        .map(|i| positions[i].clone())
        .collect();
    chosen.sort_by_key(|(t, r)| (*t, r.start));
    map_tokens(text, |ti, tok| {
        let ranges: Vec<Range<usize>> = chosen.iter().filter(|(t, _)| *t == ti).map(|(_, r)| r.clone()).collect();
        replace_ranges(tok, &ranges, STOP_TOKEN)
    })
}

/// Replaces the alphanumeric core of each span with `<PROPN>`. Spans are
/// character offsets and must be sorted-able, disjoint and word aligned.
pub fn mask_propn(sample_id: &str, text: &str, spans: &[Span]) -> Result<String, PerturbError> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = spans.to_vec();
    spans.sort();
    propn::validate_spans(sample_id, &chars, &spans)?;
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for sp in &spans {
        let mut s = sp.start;
        let mut e = sp.end;
        while s < e && !chars[s].is_alphanumeric() {
            s += 1;
        }
        while e > s && !chars[e - 1].is_alphanumeric() {
            e -= 1;
        }
        if s == e {
            continue;
        }
        out.extend(&chars[last..s]);
        out.push_str(PROPN_TOKEN);
        last = e;
    }
    out.extend(&chars[last..]);
    Ok(out)
}

/// Applies one ablation to a sample. Seeded variants use the per-sample
/// seed `derive_seed(spec.seed, sample_id)`.
pub fn apply_variant(
    sample: &Sample,
    spec: &VariantSpec,
    lexicon: &StopwordLexicon,
    propn: Option<&[Span]>,
) -> Result<String, PerturbError> {
    let seed = derive_seed(spec.seed, &sample.sample_id);
    let text = sample.text.as_str();
    let spans = || propn.ok_or_else(|| PerturbError::MissingAnnotation(sample.sample_id.clone()));
    Ok(match spec.kind {
        VariantKind::Normal => text.to_string(),
        VariantKind::Lowercase => lowercase(text),
        VariantKind::NoPunctuation => remove_punctuation(text),
        VariantKind::MaskStopwords(c) => mask_stopwords(text, c, lexicon),
        VariantKind::Shuffle => shuffle_tokens(text, seed),
        VariantKind::MaskPropn => mask_propn(&sample.sample_id, text, spans()?)?,
        VariantKind::MaskRandomMatched => mask_random_matched(text, lexicon, seed),
        VariantKind::AllModifications => {
            let t = mask_propn(&sample.sample_id, text, spans()?)?;
            let t = mask_stopwords(&t, StopCategory::All, lexicon);
            let t = remove_punctuation(&t);
            let t = lowercase(&t);
            shuffle_tokens(&t, seed)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::SOWERBERRY;
    use proptest::prelude::*;

    fn sample(text: &str) -> Sample {
        Sample {
            sample_id: "oliver:000001".into(),
            novel_id: "oliver".into(),
            class_label: "Charles Dickens".into(),
            text: text.into(),
            word_count: text.split_whitespace().count(),
            from_withheld_novel: true,
        }
    }

    fn run(kind: VariantKind, text: &str) -> String {
        apply_variant(&sample(text), &VariantSpec::new(kind, 7), &StopwordLexicon::default(), None).unwrap()
    }

    fn sowerberry_span() -> Vec<Span> {
        let start = SOWERBERRY.find("Sowerberry").unwrap();
        let start = SOWERBERRY[..start].chars().count();
        vec![Span { start, end: start + "Sowerberry".len() }]
    }

    #[test]
    fn golden_lowercase() {
        assert_eq!(
            run(VariantKind::Lowercase, SOWERBERRY),
            "``then come with me,'' said mrs. sowerberry: taking up a dim and dirty lamp, and leading the way upstairs; ``your bed's under the counter.''"
        );
    }

    #[test]
    fn golden_no_punctuation() {
        assert_eq!(
            run(VariantKind::NoPunctuation, SOWERBERRY),
            "Then come with me said Mrs Sowerberry taking up a dim and dirty lamp and leading the way upstairs your beds under the counter"
        );
    }

    #[test]
    fn golden_no_stop_words() {
        assert_eq!(
            run(VariantKind::MaskStopwords(StopCategory::All), SOWERBERRY),
            "``<STOP> come <STOP> <STOP>,'' said Mrs. Sowerberry: taking <STOP> <STOP> dim <STOP> dirty lamp, <STOP> leading <STOP> way upstairs; ``<STOP> bed'<STOP> <STOP> <STOP> counter.''"
        );
        assert_eq!(stopword_count(&sample(SOWERBERRY), StopCategory::All, &StopwordLexicon::default()), 12);
    }

    #[test]
    fn golden_no_proper_nouns() {
        let out = apply_variant(
            &sample(SOWERBERRY),
            &VariantSpec::new(VariantKind::MaskPropn, 0),
            &StopwordLexicon::default(),
            Some(&sowerberry_span()),
        )
        .unwrap();
        assert_eq!(
            out,
            "``Then come with me,'' said Mrs. <PROPN>: taking up a dim and dirty lamp, and leading the way upstairs; ``your bed's under the counter.''"
        );
    }

    #[test]
    fn golden_all_modifications_multiset() {
        let out = apply_variant(
            &sample(SOWERBERRY),
            &VariantSpec::new(VariantKind::AllModifications, 11),
            &StopwordLexicon::default(),
            Some(&sowerberry_span()),
        )
        .unwrap();
        let golden = "taking upstairs <STOP> <STOP> <STOP> leading come lamp way <STOP> <STOP> <PROPN> bed<STOP> <STOP> <STOP> <STOP> dirty counter <STOP> mrs dim said <STOP> <STOP>";
        let mut a: Vec<&str> = out.split(' ').collect();
        let mut b: Vec<&str> = golden.split(' ').collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn propn_required() {
        let err = apply_variant(&sample(SOWERBERRY), &VariantSpec::new(VariantKind::MaskPropn, 0), &StopwordLexicon::default(), None);
        assert_eq!(err, Err(PerturbError::MissingAnnotation("oliver:000001".into())));
    }

    #[test]
    fn no_stop_words_means_zero() {
        assert_eq!(count_stopwords("xylophone quartz", StopCategory::All, &StopwordLexicon::default()), 0);
        assert_eq!(run(VariantKind::MaskRandomMatched, "xylophone quartz"), "xylophone quartz");
    }

    #[test]
    fn whole_contraction_masks_once() {
        let lex = StopwordLexicon::default();
        assert_eq!(mask_stopwords("Don't go", StopCategory::All, &lex), "<STOP> go");
        assert_eq!(mask_stopwords("it's mine", StopCategory::Pronoun, &lex), "<STOP>'s mine");
        assert_eq!(count_stopwords("Don't go", StopCategory::All, &lex), 1);
    }

    #[test]
    fn placeholders_survive_later_steps() {
        assert_eq!(lowercase("A <STOP> B <PROPN>."), "a <STOP> b <PROPN>.");
        assert_eq!(remove_punctuation("bed'<STOP> <PROPN>: ``x''"), "bed<STOP> <PROPN> x");
        let lex = StopwordLexicon::default();
        assert_eq!(mask_stopwords("<STOP> the", StopCategory::All, &lex), "<STOP> <STOP>");
    }

    #[test]
    fn variant_ids_parse_back() {
        for k in VariantKind::standard_grid() {
            assert_eq!(VariantKind::parse(&k.id(), None).unwrap(), k);
        }
        assert_eq!(VariantKind::parse("mask_stopwords", Some("verb")).unwrap(), VariantKind::MaskStopwords(StopCategory::Verb));
        assert!(VariantKind::parse("shuffle", Some("verb")).is_err());
        assert!(VariantKind::parse("stop_gerund", None).is_err());
    }

    fn sentence() -> impl Strategy<Value = String> {
        let word = prop_oneof![
            Just("the".to_string()),
            Just("The".to_string()),
            Just("and,".to_string()),
            Just("bed's".to_string()),
            Just("``your".to_string()),
            Just("counter.''".to_string()),
            Just("Don't".to_string()),
            Just("it's".to_string()),
            Just("they".to_string()),
            Just("Mrs.".to_string()),
            "[A-Za-z]{1,8}[,.;:!?]?",
        ];
        prop::collection::vec(word, 1..40).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn normal_is_identity(s in sentence()) {
            prop_assert_eq!(run(VariantKind::Normal, &s), s);
        }

        #[test]
        fn lowercase_and_punctuation_idempotent(s in sentence()) {
            let l = lowercase(&s);
            prop_assert_eq!(lowercase(&l), l.clone());
            let p = remove_punctuation(&s);
            prop_assert_eq!(remove_punctuation(&p), p);
        }

        #[test]
        fn masked_output_has_no_stop_words(s in sentence(), ci in 0usize..10) {
            let lex = StopwordLexicon::default();
            let c = StopCategory::ALL_CATEGORIES[ci];
            let out = mask_stopwords(&s, c, &lex);
            for tok in out.split_whitespace() {
                for r in word_parts(tok) {
                    prop_assert!(!lex.contains(c, &tok[r].to_lowercase()), "{} in {}", tok, out);
                }
            }
        }

        #[test]
        fn shuffle_is_seeded_permutation(s in sentence(), seed in any::<u64>()) {
            let a = shuffle_tokens(&s, seed);
            prop_assert_eq!(&a, &shuffle_tokens(&s, seed));
            let mut x: Vec<&str> = a.split_whitespace().collect();
            let mut y: Vec<&str> = s.split_whitespace().collect();
            x.sort_unstable();
            y.sort_unstable();
            prop_assert_eq!(x, y);
        }

        #[test]
        fn category_masks_subset_of_all(s in sentence(), ci in 1usize..10) {
            let lex = StopwordLexicon::default();
            let c = StopCategory::ALL_CATEGORIES[ci];
            let by_c = mask_stopwords(&s, c, &lex);
            let by_all = mask_stopwords(&s, StopCategory::All, &lex);
            for (tc, ta) in by_c.split_whitespace().zip(by_all.split_whitespace()) {
                if tc.contains(STOP_TOKEN) {
                    prop_assert!(ta.contains(STOP_TOKEN), "{} masked by {} but not all", tc, c);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn random_matched_masks_stopword_count(s in sentence(), seed in any::<u64>()) {
            let lex = StopwordLexicon::default();
            let out = mask_random_matched(&s, &lex, seed);
            prop_assert_eq!(out.matches(STOP_TOKEN).count(), count_stopwords(&s, StopCategory::All, &lex));
        }
    }
}
