//! Prompt/target pairs for fine-tuning seq2seq and causal models.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::Sample;
use crate::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinetuneStyle {
    /// Sentinel-masked field in front of the text, for T5-style models.
    T5Mask,
    /// Field appended after the text, for decoder-only models.
    CausalSuffix,
}

impl std::str::FromStr for FinetuneStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "t5_mask" => Ok(FinetuneStyle::T5Mask),
            "causal_suffix" => Ok(FinetuneStyle::CausalSuffix),
            other => Err(format!("unknown fine-tune style {other:?} (expected t5_mask or causal_suffix)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub sample_id: String,
    pub input: String,
    pub output: String,
}

const T5_SENTINEL: &str = "<extra_id_0>";

fn format_pair(text: &str, label: &str, field: &str, style: FinetuneStyle) -> (String, String) {
    match style {
        FinetuneStyle::T5Mask => (format!("{field}: {T5_SENTINEL} | {text}"), format!("{field}: {label} | {text}")),
        FinetuneStyle::CausalSuffix => (format!("{text} | {field}: "), format!("{text} | {field}: {label}")),
    }
}

pub fn emit_finetune_records(samples: &[Sample], task: Task, style: FinetuneStyle) -> Vec<FinetuneRecord> {
    samples
        .iter()
        .map(|s| {
            let (input, output) = format_pair(&s.text, &s.class_label, task.field_name(), style);
            FinetuneRecord { sample_id: s.sample_id.clone(), input, output }
        })
        .collect()
}

/// Recovers `(label, text)` from an output string. Labels never contain
/// `" | "`, which makes the split unambiguous for the prefix style; the
/// suffix style splits at the last field marker.
pub fn parse_finetune_output(output: &str, task: Task, style: FinetuneStyle) -> Option<(String, String)> {
    let field = task.field_name();
    match style {
        FinetuneStyle::T5Mask => {
            let rest = output.strip_prefix(field)?.strip_prefix(": ")?;
            let (label, text) = rest.split_once(" | ")?;
            Some((label.to_string(), text.to_string()))
        }
        FinetuneStyle::CausalSuffix => {
            let marker = format!(" | {field}: ");
            let at = output.rfind(&marker)?;
            Some((output[at + marker.len()..].to_string(), output[..at].to_string()))
        }
    }
}

pub fn write_finetune_jsonl<W: Write>(mut w: W, records: &[FinetuneRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
