//! Proper-noun annotations: external span files and a capitalization
//! heuristic used when no tagger output is available.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{PerturbError, StopCategory, StopwordLexicon};
use crate::corpus::Sample;
use crate::corpus::ABBREVIATIONS;

/// Half-open character range `[start, end)` in a sample's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Proper-noun spans per sample.
///
/// A sample listed with no spans is annotated as having no proper nouns;
/// a sample absent from the map is unannotated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropnAnnotation {
    spans: BTreeMap<String, Vec<Span>>,
}

impl PropnAnnotation {
    pub fn insert(&mut self, sample_id: &str, spans: Vec<Span>) {
        self.spans.entry(sample_id.to_string()).or_default().extend(spans);
    }

    pub fn get(&self, sample_id: &str) -> Option<&[Span]> {
        self.spans.get(sample_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Span])> {
        self.spans.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// `sample_id TAB start TAB end` lines; samples without spans are
    /// written as `sample_id TAB TAB`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, spans) in &self.spans {
            if spans.is_empty() {
                out.push_str(&format!("{id}\t\t\n"));
            }
            for s in spans {
                out.push_str(&format!("{id}\t{}\t{}\n", s.start, s.end));
            }
        }
        out
    }
}

/// Parses `sample_id TAB start TAB end` lines (character offsets). Empty
/// start and end fields mark a sample with no proper nouns.
pub fn parse_propn_annotations(input: &str) -> Result<PropnAnnotation, PerturbError> {
    let mut ann = PropnAnnotation::default();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| PerturbError::MalformedLine { line_no, reason };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 || f[0].is_empty() {
            return Err(bad(format!("expected 3 fields, got {}", f.len())));
        }
        if f[1].is_empty() && f[2].is_empty() {
            ann.insert(f[0], Vec::new());
            continue;
        }
        let start: usize = f[1].parse().map_err(|_| bad(format!("bad start {:?}", f[1])))?;
        let end: usize = f[2].parse().map_err(|_| bad(format!("bad end {:?}", f[2])))?;
        if start >= end {
            return Err(bad(format!("empty span {start}..{end}")));
        }
        ann.insert(f[0], vec![Span { start, end }]);
    }
    Ok(ann)
}

/// Checks sorted spans against the text.
pub(super) fn validate_spans(sample_id: &str, chars: &[char], spans: &[Span]) -> Result<(), PerturbError> {
    let err = |sp: &Span, reason| PerturbError::InvalidSpan { sample_id: sample_id.to_string(), start: sp.start, end: sp.end, reason };
    let mut prev_end = 0;
    for (i, sp) in spans.iter().enumerate() {
        if sp.start >= sp.end {
            return Err(err(sp, "empty"));
        }
        if sp.end > chars.len() {
            return Err(err(sp, "out of bounds"));
        }
        if i > 0 && sp.start < prev_end {
            return Err(err(sp, "overlapping"));
        }
        if sp.start > 0 && chars[sp.start - 1].is_alphanumeric() && chars[sp.start].is_alphanumeric() {
            return Err(err(sp, "starts inside a word"));
        }
        if sp.end < chars.len() && chars[sp.end - 1].is_alphanumeric() && chars[sp.end].is_alphanumeric() {
            return Err(err(sp, "ends inside a word"));
        }
        prev_end = sp.end;
    }
    Ok(())
}

/// Lowercase capitalized words that are not treated as proper nouns:
/// titles and forms of address, weekdays.
pub const COMMON_CAPITALIZED: &[&str] = &[
    "mr", "mrs", "ms", "miss", "missus", "master", "mister", "madam", "madame", "mme", "mlle",
    "sir", "lady", "lord", "dame", "dr", "doctor", "prof", "professor", "rev", "reverend",
    "st", "saint", "capt", "captain", "col", "colonel", "gen", "general", "lt", "lieutenant",
    "sgt", "sergeant", "major", "hon", "esq", "messrs", "monsieur", "mademoiselle", "herr",
    "frau", "signor", "signora", "don", "dona", "king", "queen", "prince", "princess", "duke",
    "duchess", "earl", "count", "countess", "baron", "baroness", "uncle", "aunt",
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

const OPENING_QUOTES: &[char] = &['"', '`', '\'', '\u{201C}', '\u{2018}', '(', '['];

/// Capitalized words seen away from sentence-initial position, collected
/// over a novel's samples.
#[derive(Debug, Clone, Default)]
pub struct PropnEvidence {
    words: HashSet<String>,
}

impl PropnEvidence {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a Sample>, lexicon: &StopwordLexicon) -> Self {
        let mut words = HashSet::new();
        for s in samples {
            for c in candidates(&s.text, lexicon) {
                if !c.initial {
                    words.insert(c.word);
                }
            }
        }
        Self { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

struct Candidate {
    word: String,
    span: Span,
    initial: bool,
}

fn ends_sentence(token: &str) -> bool {
    let t = token.trim_end_matches(['"', '\'', ')', ']', '\u{201D}', '\u{2019}']);
    if !t.ends_with(['.', '!', '?']) {
        return false;
    }
    let word = t.trim_end_matches(['.', '!', '?']).trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    !(t.ends_with('.') && !t.ends_with("..") && (ABBREVIATIONS.contains(&word.as_str()) || word.chars().count() == 1))
}

/// Capitalized, non-stop, non-title word cores with their char spans.
fn candidates(text: &str, lexicon: &StopwordLexicon) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut char_pos = 0usize;
    let mut prev: Option<&str> = None;
    let mut rest = text;
    while !rest.is_empty() {
        let ws = rest.len() - rest.trim_start().len();
        char_pos += rest[..ws].chars().count();
        rest = &rest[ws..];
        if rest.is_empty() {
            break;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let tok = &rest[..end];
        let initial = prev.is_none_or(ends_sentence) || tok.starts_with(OPENING_QUOTES);
        // leading punctuation, then the first apostrophe part
        let lead: usize = tok.chars().take_while(|c| !c.is_alphanumeric()).count();
        let word: String = tok.chars().skip(lead).take_while(|c| c.is_alphanumeric() || *c == '-').collect();
        let word = word.trim_end_matches('-').to_string();
        if let Some(first) = word.chars().next() {
            let lower = word.to_lowercase();
            if first.is_uppercase()
                && !lexicon.contains(StopCategory::All, &lower)
                && !COMMON_CAPITALIZED.contains(&lower.as_str())
            {
                let start = char_pos + lead;
                out.push(Candidate { span: Span { start, end: start + word.chars().count() }, word, initial });
            }
        }
        char_pos += tok.chars().count();
        prev = Some(tok);
        rest = &rest[end..];
    }
    out
}

/// Marks capitalized words that are not sentence-initial, not stop words and
/// not common titles or weekdays. A sentence-initial word is marked only if
/// it also occurs capitalized mid-sentence in this sample or in `evidence`.
pub fn heuristic_propn(sample: &Sample, lexicon: &StopwordLexicon, evidence: Option<&PropnEvidence>) -> PropnAnnotation {
    let cands = candidates(&sample.text, lexicon);
    let local: HashSet<&str> = cands.iter().filter(|c| !c.initial).map(|c| c.word.as_str()).collect();
    let spans = cands
        .iter()
        .filter(|c| !c.initial || local.contains(c.word.as_str()) || evidence.is_some_and(|e| e.contains(&c.word)))
        .map(|c| c.span)
        .collect();
    let mut ann = PropnAnnotation::default();
    ann.insert(&sample.sample_id, spans);
    ann
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::SOWERBERRY;

    fn sample(text: &str) -> Sample {
        Sample {
            sample_id: "s1".into(),
            novel_id: "n".into(),
            class_label: "A".into(),
            text: text.into(),
            word_count: text.split_whitespace().count(),
            from_withheld_novel: false,
        }
    }

    fn marked(text: &str, evidence: Option<&PropnEvidence>) -> Vec<String> {
        let ann = heuristic_propn(&sample(text), &StopwordLexicon::default(), evidence);
        let chars: Vec<char> = text.chars().collect();
        ann.get("s1").unwrap().iter().map(|s| chars[s.start..s.end].iter().collect()).collect()
    }

    #[test]
    fn sowerberry_only() {
        assert_eq!(marked(SOWERBERRY, None), vec!["Sowerberry"]);
    }

    #[test]
    fn lowercase_sentence_is_empty() {
        assert!(marked("nothing here is capitalized at all, truly.", None).is_empty());
    }

    #[test]
    fn initial_word_needs_evidence() {
        assert_eq!(marked("London said London.", None), vec!["London", "London"]);
        assert!(marked("Fagin laughed.", None).is_empty());
        let ev = PropnEvidence::from_samples([&sample("He saw Fagin there.")], &StopwordLexicon::default());
        assert_eq!(marked("Fagin laughed.", Some(&ev)), vec!["Fagin"]);
    }

    #[test]
    fn title_does_not_end_sentence() {
        assert_eq!(marked("They met Dr. Losberne and Monday came.", None), vec!["Losberne"]);
    }

    #[test]
    fn possessive_span_covers_name() {
        assert_eq!(marked("It was Nancy's room.", None), vec!["Nancy"]);
    }

    #[test]
    fn parse_and_validate() {
        let ann = parse_propn_annotations("s1\t3\t7\ns1\t10\t12\ns2\t\t\n").unwrap();
        assert_eq!(ann.get("s1").unwrap().len(), 2);
        assert_eq!(ann.get("s2").unwrap().len(), 0);
        assert!(ann.get("s3").is_none());
        assert_eq!(parse_propn_annotations(&ann.to_tsv()).unwrap(), ann);
        assert!(parse_propn_annotations("s1\t3").is_err());
        assert!(parse_propn_annotations("s1\t7\t3").is_err());
        assert!(parse_propn_annotations("s1\tx\t3").is_err());
    }

    #[test]
    fn span_validation() {
        let chars: Vec<char> = "Tom met Ann.".chars().collect();
        assert!(validate_spans("s", &chars, &[Span { start: 0, end: 3 }, Span { start: 8, end: 11 }]).is_ok());
        assert!(validate_spans("s", &chars, &[Span { start: 1, end: 3 }]).is_err());
        assert!(validate_spans("s", &chars, &[Span { start: 0, end: 2 }]).is_err());
        assert!(validate_spans("s", &chars, &[Span { start: 8, end: 20 }]).is_err());
        assert!(validate_spans("s", &chars, &[Span { start: 0, end: 5 }, Span { start: 4, end: 7 }]).is_err());
    }
}
