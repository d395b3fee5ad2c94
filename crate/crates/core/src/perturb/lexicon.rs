//! Stop-word lexicon grouped by part of speech.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopCategory {
    All,
    Adjective,
    Adverb,
    Conjunction,
    Contraction,
    Determiner,
    Noun,
    Preposition,
    Pronoun,
    Verb,
}

impl StopCategory {
    pub const ALL_CATEGORIES: [StopCategory; 10] = [
        StopCategory::All,
        StopCategory::Adjective,
        StopCategory::Adverb,
        StopCategory::Conjunction,
        StopCategory::Contraction,
        StopCategory::Determiner,
        StopCategory::Noun,
        StopCategory::Preposition,
        StopCategory::Pronoun,
        StopCategory::Verb,
    ];

    /// The nine part-of-speech categories (everything except `All`).
    pub fn parts_of_speech() -> &'static [StopCategory] {
        &Self::ALL_CATEGORIES[1..]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StopCategory::All => "all",
            StopCategory::Adjective => "adjective",
            StopCategory::Adverb => "adverb",
            StopCategory::Conjunction => "conjunction",
            StopCategory::Contraction => "contraction",
            StopCategory::Determiner => "determiner",
            StopCategory::Noun => "noun",
            StopCategory::Preposition => "preposition",
            StopCategory::Pronoun => "pronoun",
            StopCategory::Verb => "verb",
        }
    }

    fn raw_list(self) -> &'static str {
        match self {
            StopCategory::All => ALL,
            StopCategory::Adjective => ADJECTIVE,
            StopCategory::Adverb => ADVERB,
            StopCategory::Conjunction => CONJUNCTION,
            StopCategory::Contraction => CONTRACTION,
            StopCategory::Determiner => DETERMINER,
            StopCategory::Noun => NOUN,
            StopCategory::Preposition => PREPOSITION,
            StopCategory::Pronoun => PRONOUN,
            StopCategory::Verb => VERB,
        }
    }
}

impl std::str::FromStr for StopCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL_CATEGORIES
            .iter()
            .copied()
            .find(|c| c.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown stop-word category {s:?}"))
    }
}

impl std::fmt::Display for StopCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// English stop words (the standard 179-word list) and its part-of-speech
// breakdown.
const ALL: &str = "s, it's, you've, you'll, now, didn't, above, hadn't, has, had, mightn't, don't, for, its, just, she, about, not, his, most, am, we, ll, again, you're, in, aren, or, why, isn't, themselves, you'd, because, the, as, that'll, did, wouldn, couldn't, needn't, to, couldn, a, before, some, been, will, while, re, shouldn, theirs, each, doesn't, isn, be, weren't, any, and, myself, what, hers, all, down, she's, than, our, nor, m, their, these, ve, won't, below, d, it, which, over, how, own, from, shan't, weren, doesn, through, does, if, having, haven, when, too, under, herself, her, wasn't, where, o, ain, itself, mustn't, was, into, they, other, such, those, ours, yourselves, that, himself, them, only, against, this, he, can, very, both, yourself, by, on, hasn, ourselves, more, i, needn, your, won, further, aren't, up, few, then, hadn, with, between, doing, haven't, t, him, an, being, should, there, whom, here, yours, during, shan, didn, so, after, but, wouldn't, do, ma, should've, who, hasn't, mustn, out, is, you, were, have, same, wasn, my, off, once, shouldn't, are, don, y, mightn, me, until, at, no, of";
const ADJECTIVE: &str = "own, just, other, down, out, not, up, under, same, through, further, few, very, now, only, off, over, in";
const ADVERB: &str = "again, between, t, all, as, some, in, then, that, while, when, so, what, no, just, both, nor, this, here, any, before, down, out, not, too, most, up, why, once, but, under, below, same, through, further, there, by, how, each, where, on, very, now, only, above, off, after, about, to, over";
const CONJUNCTION: &str = "as, that, while, when, so, nor, before, for, or, once, but, than, because, where, until, and, now, only, after, if";
const CONTRACTION: &str = "you'd, weren't, mustn, doesn't, it's, wouldn't, hasn, needn, didn, haven, couldn't, needn't, that'll, isn, doesn, mightn't, didn't, hadn, wasn, you've, wouldn, shouldn, don, weren, haven't, you'll, shan, couldn, shan't, aren't, mightn, mustn't, shouldn't, don't, aren, hasn't, isn't, should've, won't, wasn't, you're, she's, hadn't, ain, won, re, s, t, d, ll, o";
const DETERMINER: &str = "some, all, them, an, that, such, more, what, no, which, both, a, his, this, the, any, its, most, our, these, each, few, her, your, their, my, those";
const NOUN: &str = "while, no, down, she, up, why, but, ma, m, few, doing, being, have, he, if, all, in, out, do";
const PREPOSITION: &str = "between, from, as, with, in, before, for, down, out, up, during, against, but, under, of, below, through, than, by, until, on, into, at, above, off, after, about, to, over";
const PRONOUN: &str = "whom, them, some, me, that, own, such, yourself, you, more, what, which, hers, both, other, his, this, they, any, we, who, most, she, i, himself, themselves, him, these, itself, same, each, few, it, theirs, her, yours, ours, ourselves, myself, herself, those, y, yourselves, he, all";
const VERB: &str = "ve, did, s, own, while, should, re, had, down, out, d, be, up, are, was, is, ll, were, further, been, does, will, can, do, off, has, am, doing, having, being, have, other";

/// Lowercase stop-word sets per category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordLexicon {
    sets: BTreeMap<StopCategory, BTreeSet<String>>,
}

impl Default for StopwordLexicon {
    fn default() -> Self {
        let sets = StopCategory::ALL_CATEGORIES
            .iter()
            .map(|&c| (c, c.raw_list().split(", ").map(str::to_string).collect()))
            .collect();
        Self { sets }
    }
}

impl StopwordLexicon {
    pub fn set(&self, category: StopCategory) -> &BTreeSet<String> {
        &self.sets[&category]
    }

    pub fn contains(&self, category: StopCategory, word_lower: &str) -> bool {
        self.sets[&category].contains(word_lower)
    }
}
