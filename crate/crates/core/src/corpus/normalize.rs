//! Punctuation standardization.

use super::CorpusError;

/// Default character canonicalization table: `(from, to)`.
///
/// Curly and low-9 quotes become ASCII quotes, every dash variant becomes the
/// em dash, and the ellipsis character is spelled out.
pub const DEFAULT_CHAR_MAP: &[(char, &str)] = &[
    ('\u{2018}', "'"),  // left single quotation mark
    ('\u{2019}', "'"),  // right single quotation mark
    ('\u{201A}', "'"),  // single low-9 quotation mark
    ('\u{201B}', "'"),  // single high-reversed-9 quotation mark
    ('\u{2032}', "'"),  // prime
    ('\u{201C}', "\""), // left double quotation mark
    ('\u{201D}', "\""), // right double quotation mark
    ('\u{201E}', "\""), // double low-9 quotation mark
    ('\u{201F}', "\""), // double high-reversed-9 quotation mark
    ('\u{2033}', "\""), // double prime
    ('\u{2012}', "\u{2014}"), // figure dash
    ('\u{2013}', "\u{2014}"), // en dash
    ('\u{2015}', "\u{2014}"), // horizontal bar
    ('\u{2E3A}', "\u{2014}"), // two-em dash
    ('\u{2E3B}', "\u{2014}"), // three-em dash
    ('\u{2026}', "..."), // horizontal ellipsis
];

/// Character mapping applied by [`normalize_text_with`].
///
/// Replacements may not contain whitespace or any mapped character, which
/// keeps normalization idempotent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationTable {
    entries: Vec<(char, String)>,
}

impl Default for NormalizationTable {
    fn default() -> Self {
        Self {
            entries: DEFAULT_CHAR_MAP
                .iter()
                .map(|&(c, s)| (c, s.to_string()))
                .collect(),
        }
    }
}

impl NormalizationTable {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(char, String)] {
        &self.entries
    }

    /// Adds or replaces a mapping.
    pub fn insert(&mut self, from: char, to: &str) -> Result<(), CorpusError> {
        if matches!(from, ' ' | '\t' | '\r' | '\n') {
            return Err(CorpusError::InvalidMapping(format!(
                "whitespace {from:?} cannot be remapped"
            )));
        }
        if to.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidMapping(format!(
                "replacement for {from:?} contains whitespace"
            )));
        }
        self.entries.retain(|(c, _)| *c != from);
        self.entries.push((from, to.to_string()));
        let keys: Vec<char> = self.entries.iter().map(|(c, _)| *c).collect();
        if let Some((c, _)) = self
            .entries
            .iter()
            .find(|(_, s)| s.chars().any(|ch| keys.contains(&ch)))
        {
            let c = *c;
            self.entries.retain(|(k, _)| *k != from);
            return Err(CorpusError::InvalidMapping(format!(
                "replacement for {c:?} contains a mapped character"
            )));
        }
        Ok(())
    }

    /// Parses `U+XXXX<TAB>replacement` lines; blank lines and `#` comments
    /// are skipped. Entries extend the default table.
    pub fn parse_tsv(input: &str) -> Result<Self, CorpusError> {
        let mut table = Self::default();
        for (n, line) in input.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (code, repl) = line
                .split_once('\t')
                .ok_or(CorpusError::MalformedLine { line_no, reason: "expected 2 fields".into() })?;
            let hex = code
                .strip_prefix("U+")
                .ok_or(CorpusError::MalformedLine { line_no, reason: "codepoint must start with U+".into() })?;
            let from = u32::from_str_radix(hex, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or(CorpusError::MalformedLine { line_no, reason: format!("bad codepoint {code}") })?;
            table.insert(from, repl)?;
        }
        Ok(table)
    }

    fn lookup(&self, c: char) -> Option<&str> {
        self.entries.iter().find(|(k, _)| *k == c).map(|(_, s)| s.as_str())
    }
}

/// Normalizes with the default table.
pub fn normalize_text(raw: &str) -> String {
    normalize_text_with(raw, &NormalizationTable::default())
}

/// Applies the character table, turns CRLF and lone CR into LF, and
/// collapses every run of spaces and tabs into a single space.
pub fn normalize_text_with(raw: &str, table: &NormalizationTable) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    let mut in_blank_run = false;
    while let Some(c) = chars.next() {
        match c {
            ' ' | '\t' => {
                if !in_blank_run {
                    out.push(' ');
                    in_blank_run = true;
                }
                continue;
            }
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                out.push('\n');
            }
            _ => match table.lookup(c) {
                Some(rep) => out.push_str(rep),
                None => out.push(c),
            },
        }
        in_blank_run = false;
    }
    out
}
