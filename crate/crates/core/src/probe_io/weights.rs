//! Group × token weight matrices (summed attention, attributions or plain
//! counts) read from `group TAB token TAB weight` triples.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ProbeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Count,
    AttentionSum,
    AttributionSum,
}

impl WeightKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightKind::Count => "count",
            WeightKind::AttentionSum => "attention_sum",
            WeightKind::AttributionSum => "attribution_sum",
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for WeightKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(WeightKind::Count),
            "attention_sum" => Ok(WeightKind::AttentionSum),
            "attribution_sum" => Ok(WeightKind::AttributionSum),
            other => Err(format!("unknown weight kind {other:?}")),
        }
    }
}

/// What to do with negative weights. Only attribution sums may be clamped;
/// counts and attention are nonnegative by construction, so a negative value
/// there means a broken file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativePolicy {
    #[default]
    Reject,
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub kind: WeightKind,
    /// Row labels in first-appearance order.
    pub groups: Vec<String>,
    /// Column labels in first-appearance order.
    pub tokens: Vec<String>,
    /// `weights[g][t]`, zero for pairs absent from the input.
    pub weights: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn group_index(&self, group: &str) -> Option<usize> {
        self.groups.iter().position(|g| g == group)
    }

    pub fn row(&self, group: &str) -> Option<&[f64]> {
        self.group_index(group).map(|i| self.weights[i].as_slice())
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.weights[i].iter().sum()
    }

    /// Dense triples, every group × token pair in matrix order. Weights use
    /// the shortest round-tripping decimal form.
    pub fn write_triples<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (g, row) in self.groups.iter().zip(&self.weights) {
            for (t, x) in self.tokens.iter().zip(row) {
                writeln!(w, "{g}\t{t}\t{x}")?;
            }
        }
        Ok(())
    }
}

/// Parses weight triples. Returns the matrix and one warning per clamped
/// value.
pub fn parse_weight_triples(
    input: &str,
    kind: WeightKind,
    negatives: NegativePolicy,
) -> Result<(WeightMatrix, Vec<String>), ProbeError> {
    let mut groups: Vec<String> = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut gi: HashMap<String, usize> = HashMap::new();
    let mut ti: HashMap<String, usize> = HashMap::new();
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut warnings = Vec::new();

    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| ProbeError::MalformedLine { line_no, reason };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(bad(format!("expected group, token, weight; found {} fields", f.len())));
        }
        if f[0].is_empty() {
            return Err(bad("empty group label".into()));
        }
        // Tokens may be any non-empty string, including punctuation and
        // subword markers.
        if f[1].is_empty() {
            return Err(bad("empty token".into()));
        }
        let mut weight: f64 = f[2].parse().map_err(|_| bad(format!("weight {:?} is not a number", f[2])))?;
        if !weight.is_finite() {
            return Err(bad(format!("weight {:?} is not finite", f[2])));
        }
        if weight < 0.0 {
            if kind == WeightKind::AttributionSum && negatives == NegativePolicy::Clamp {
                warnings.push(format!("line {line_no}: clamped {weight} to 0 for ({}, {})", f[0], f[1]));
                weight = 0.0;
            } else {
                return Err(ProbeError::NegativeWeight { line_no, weight, kind });
            }
        }
        let g = *gi.entry(f[0].to_string()).or_insert_with(|| {
            groups.push(f[0].to_string());
            groups.len() - 1
        });
        let t = *ti.entry(f[1].to_string()).or_insert_with(|| {
            tokens.push(f[1].to_string());
            tokens.len() - 1
        });
        if !seen.insert((g, t)) {
            return Err(ProbeError::DuplicateTriple { line_no, group: f[0].to_string(), token: f[1].to_string() });
        }
        cells.push((g, t, weight));
    }

    let mut weights = vec![vec![0.0; tokens.len()]; groups.len()];
    for (g, t, x) in cells {
        weights[g][t] = x;
    }
    Ok((WeightMatrix { kind, groups, tokens, weights }, warnings))
}

/// How rows evaluated with different frequencies are made comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    /// Divide each row by how many times more often it was evaluated.
    #[default]
    Multiplicity,
    /// Divide each row by its total mass.
    MassNormalize,
}

impl Standardization {
    pub fn as_str(self) -> &'static str {
        match self {
            Standardization::Multiplicity => "multiplicity",
            Standardization::MassNormalize => "mass_normalize",
        }
    }

    pub fn apply(self, m: &WeightMatrix, multiplicity: &BTreeMap<String, u64>) -> Result<WeightMatrix, ProbeError> {
        match self {
            Standardization::Multiplicity => standardize_groups(m, multiplicity),
            Standardization::MassNormalize => Ok(mass_normalize(m)),
        }
    }
}

impl std::str::FromStr for Standardization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiplicity" => Ok(Standardization::Multiplicity),
            "mass_normalize" => Ok(Standardization::MassNormalize),
            other => Err(format!("unknown standardization {other:?}")),
        }
    }
}

/// Divides each row by its group's multiplicity. Every group needs an entry
/// and every entry must name a group.
pub fn standardize_groups(m: &WeightMatrix, multiplicity: &BTreeMap<String, u64>) -> Result<WeightMatrix, ProbeError> {
    if let Some(g) = multiplicity.keys().find(|g| m.group_index(g).is_none()) {
        return Err(ProbeError::UnknownGroup(g.clone()));
    }
    let mut out = m.clone();
    for (g, row) in m.groups.iter().zip(out.weights.iter_mut()) {
        let k = *multiplicity.get(g).ok_or_else(|| ProbeError::MissingMultiplicity(g.clone()))?;
        if k == 0 {
            return Err(ProbeError::InvalidMultiplicity { group: g.clone(), multiplicity: k });
        }
        if k > 1 {
            row.iter_mut().for_each(|x| *x /= k as f64);
        }
    }
    Ok(out)
}

/// Rows scaled to unit sum; all-zero rows are left as they are.
pub fn mass_normalize(m: &WeightMatrix) -> WeightMatrix {
    let mut out = m.clone();
    for row in &mut out.weights {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    out
}
