//! Rule-based sentence segmentation.
//!
//! A boundary is placed after a run of `.`, `!` or `?` (plus any closing
//! quotes or brackets) when it is followed by whitespace and the next word
//! does not start with a lowercase letter. A single period does not end a
//! sentence after a known abbreviation, a single-letter initial or a dotted
//! acronym. Blank lines always separate sentences.

use std::collections::HashSet;

/// Abbreviations (lowercase, without the final period) that never end a
/// sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "messrs", "mme", "mlle", "dr", "st", "jr", "sr", "prof", "rev", "revd",
    "capt", "col", "gen", "lt", "sgt", "cpl", "maj", "adm", "cmdr", "hon", "esq", "gov", "sen",
    "rep", "fr", "mt", "ft", "vs", "viz", "cf", "vol", "ch", "chap", "bros", "co", "inc", "ltd",
    "jan", "feb", "mar", "apr", "aug", "sept", "oct", "nov", "dec",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{2019}', '\u{201D}', '\u{BB}'];
const OPENERS: &[char] = &['"', '\'', '`', '(', '[', '{', '\u{2018}', '\u{201C}', '\u{AB}'];

#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::with_abbreviations(ABBREVIATIONS.iter().copied())
    }
}

impl Segmenter {
    pub fn with_abbreviations<'a>(abbrevs: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            abbreviations: abbrevs.into_iter().map(|a| a.to_lowercase()).collect(),
        }
    }

    pub fn add_abbreviation(&mut self, abbrev: &str) {
        self.abbreviations
            .insert(abbrev.trim_end_matches('.').to_lowercase());
    }

    pub fn segment(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let n = chars.len();
        let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };
        let mut out = Vec::new();
        let mut start = 0usize; // char index
        let mut i = 0usize;
        let emit = |from: usize, to: usize, out: &mut Vec<String>| {
            let s = text[byte_at(from)..byte_at(to)].trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
        };

        while i < n {
            let c = chars[i].1;
            if c == '\n' {
                let mut j = i + 1;
                while j < n && matches!(chars[j].1, ' ' | '\t') {
                    j += 1;
                }
                if j < n && chars[j].1 == '\n' {
                    emit(start, i, &mut out);
                    while j < n && chars[j].1.is_whitespace() {
                        j += 1;
                    }
                    start = j;
                    i = j;
                    continue;
                }
                i += 1;
                continue;
            }
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            let term_start = i;
            let mut j = i;
            while j < n && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            let term_end = j;
            while j < n && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end = j;
            if end < n && !chars[end].1.is_whitespace() {
                i = end.max(i + 1);
                continue;
            }
            // first letter of the next word, skipping openers
            let mut k = end;
            while k < n && chars[k].1.is_whitespace() {
                k += 1;
            }
            while k < n && OPENERS.contains(&chars[k].1) {
                k += 1;
            }
            let next = chars.get(k).map(|&(_, ch)| ch);
            let mut boundary = !next.is_some_and(char::is_lowercase);
            if boundary && term_end - term_start == 1 && chars[term_start].1 == '.' {
                let word = self.word_before(&chars, term_start);
                if self.is_non_terminal(&word) {
                    boundary = false;
                }
            }
            if boundary {
                emit(start, end, &mut out);
                start = end;
            }
            i = end;
        }
        emit(start, n, &mut out);
        out
    }

    fn word_before(&self, chars: &[(usize, char)], dot: usize) -> String {
        let mut b = dot;
        while b > 0 && !chars[b - 1].1.is_whitespace() {
            b -= 1;
        }
        let word: String = chars[b..dot].iter().map(|&(_, c)| c).collect();
        word.trim_start_matches(|c: char| !c.is_alphanumeric()).to_string()
    }

    fn is_non_terminal(&self, word: &str) -> bool {
        if word.is_empty() {
            return false;
        }
        if self.abbreviations.contains(&word.to_lowercase()) {
            return true;
        }
        let mut cs = word.chars();
        if let (Some(c), None) = (cs.next(), cs.next()) {
            return c.is_uppercase() && c != 'I';
        }
        // dotted acronym such as "U.S" or "e.g"
        word.contains('.')
            && word
                .split('.')
                .all(|part| part.chars().count() == 1 && part.chars().all(char::is_alphabetic))
    }
}

/// Segments with the default abbreviation list.
pub fn segment_sentences(text: &str) -> Vec<String> {
    Segmenter::default().segment(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn simple_boundary() {
        assert_eq!(segment_sentences("He left. She stayed."), vec!["He left.", "She stayed."]);
    }

    #[test]
    fn abbreviation_suppresses_split() {
        assert_eq!(segment_sentences("Mrs. Sowerberry spoke."), vec!["Mrs. Sowerberry spoke."]);
        assert_eq!(
            segment_sentences("Dr. Jekyll met Mr. Hyde on St. Paul's day. Then rain."),
            vec!["Dr. Jekyll met Mr. Hyde on St. Paul's day.", "Then rain."]
        );
    }

    #[test]
    fn initials_and_acronyms() {
        assert_eq!(
            segment_sentences("G. K. Chesterton wrote it. The U.S. edition sold."),
            vec!["G. K. Chesterton wrote it.", "The U.S. edition sold."]
        );
    }

    #[test]
    fn pronoun_i_ends_sentences() {
        assert_eq!(segment_sentences("So did I. We left."), vec!["So did I.", "We left."]);
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        assert_eq!(
            segment_sentences("\"Go away!\" She wept. ``Why?'' he asked."),
            vec!["\"Go away!\"", "She wept.", "``Why?'' he asked."]
        );
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(segment_sentences("\"Oh!\" said he. Fine."), vec!["\"Oh!\" said he.", "Fine."]);
    }

    #[test]
    fn blank_lines_split_and_wrapped_lines_do_not() {
        assert_eq!(
            segment_sentences("CHAPTER ONE\n\nIt was\na dark night. Rain fell"),
            vec!["CHAPTER ONE", "It was\na dark night.", "Rain fell"]
        );
    }

    #[test]
    fn empty_input() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("  \n\n ").is_empty());
    }

    const WORDS: &[&str] = &[
        "the", "house", "stood", "silent", "and", "cold", "under", "grey", "sky", "while",
        "rain", "walked", "slowly", "toward", "river", "bank", "with", "old", "friend",
    ];
    const NAMES: &[&str] = &["Sowerberry", "Bumble", "Fagin", "Nancy", "Oliver"];

    /// Builds a document of `count` sentences, each with abbreviations or
    /// initials in random positions. Returns the text and its true sentences.
    fn synthetic_document(count: usize, seed: u64) -> (String, Vec<String>) {
        let mut rng = SplitMix64::new(seed);
        let mut sentences = Vec::new();
        for _ in 0..count {
            let len = 6 + rng.below_usize(10);
            let mut toks: Vec<String> = Vec::new();
            for w in 0..len {
                if rng.below(4) == 0 {
                    let abbr = ["Mr.", "Mrs.", "Dr.", "St.", "Capt."][rng.below_usize(5)];
                    toks.push(abbr.to_string());
                    toks.push(NAMES[rng.below_usize(NAMES.len())].to_string());
                } else if rng.below(8) == 0 {
                    toks.push(format!("{}.", ['J', 'K', 'R', 'T'][rng.below_usize(4)]));
                    toks.push(NAMES[rng.below_usize(NAMES.len())].to_string());
                } else {
                    let mut word = WORDS[rng.below_usize(WORDS.len())].to_string();
                    if w == 0 {
                        word = word[..1].to_uppercase() + &word[1..];
                    }
                    toks.push(word);
                }
            }
            let end = [".", "!", "?", ".\"", "?''"][rng.below_usize(5)];
            let mut s = toks.join(" ");
            s.push_str(end);
            if end.contains('"') {
                s.insert(0, '"');
            } else if end.contains('\'') {
                s.insert_str(0, "``");
            }
            sentences.push(s);
        }
        let mut doc = String::new();
        for (i, s) in sentences.iter().enumerate() {
            if i > 0 {
                doc.push_str(if rng.below(10) == 0 { "\n" } else { " " });
            }
            doc.push_str(s);
        }
        (doc, sentences)
    }

    #[test]
    fn synthetic_document_with_abbreviations() {
        for seed in 0..5 {
            let (doc, truth) = synthetic_document(200, seed);
            let got = segment_sentences(&doc);
            assert_eq!(got.len(), 200, "seed {seed}");
            let got_flat: Vec<String> = got.iter().map(|s| s.split_whitespace().collect::<Vec<_>>().join(" ")).collect();
            assert_eq!(got_flat, truth, "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn concatenation_preserves_content(s in "[A-Za-z .!?\"'\n]{0,120}") {
            let strip = |x: &str| x.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            let joined: String = segment_sentences(&s).concat();
            prop_assert_eq!(strip(&joined), strip(&s));
        }
    }
}
