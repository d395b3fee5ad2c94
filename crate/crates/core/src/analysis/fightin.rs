//! Log-odds ratio with Dirichlet prior ("fightin' words") over real-valued
//! group × token weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::probe_io::WeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// alpha_w = alpha0 / |V|.
    #[default]
    Uniform,
    /// alpha_w = alpha0 × the token's share of all weight in the matrix.
    Informative,
}

impl std::str::FromStr for PriorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(PriorKind::Uniform),
            "informative" => Ok(PriorKind::Informative),
            other => Err(format!("unknown prior {other:?} (expected uniform or informative)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FightinToken {
    pub token: String,
    pub z: f64,
    pub delta: f64,
    pub rate_i: f64,
    pub rate_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FightinWordsResult {
    pub group_i: String,
    pub group_j: String,
    pub alpha0: f64,
    pub prior_kind: PriorKind,
    /// Sorted by z descending, then token.
    pub tokens: Vec<FightinToken>,
    /// Tokens without a usable prior (informative prior, zero pooled mass)
    /// or with a non-finite score.
    pub skipped: Vec<String>,
}

impl FightinWordsResult {
    pub fn z_by_token(&self) -> BTreeMap<&str, f64> {
        self.tokens.iter().map(|t| (t.token.as_str(), t.z)).collect()
    }
}

fn default_alpha0(m: &WeightMatrix) -> f64 {
    0.01 * m.tokens.len() as f64
}

fn score_rows(
    m: &WeightMatrix,
    yi: &[f64],
    yj: &[f64],
    labels: (&str, &str),
    alpha0: Option<f64>,
    prior: PriorKind,
) -> Result<FightinWordsResult, AnalysisError> {
    let alpha0 = alpha0.unwrap_or_else(|| default_alpha0(m));
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(AnalysisError::NonpositiveAlpha(alpha0));
    }
    if m.tokens.is_empty() {
        return Err(AnalysisError::DegenerateInput("matrix has no tokens".into()));
    }
    let v = m.tokens.len() as f64;
    let pooled: Vec<f64> = (0..m.tokens.len()).map(|t| m.weights.iter().map(|r| r[t]).sum()).collect();
    let pooled_total: f64 = pooled.iter().sum();
    let ni: f64 = yi.iter().sum();
    let nj: f64 = yj.iter().sum();

    let mut tokens = Vec::with_capacity(m.tokens.len());
    let mut skipped = Vec::new();
    for (t, token) in m.tokens.iter().enumerate() {
        let aw = match prior {
            PriorKind::Uniform => alpha0 / v,
            PriorKind::Informative if pooled_total > 0.0 => alpha0 * pooled[t] / pooled_total,
            PriorKind::Informative => 0.0,
        };
        if aw <= 0.0 {
            skipped.push(token.clone());
            continue;
        }
        let delta = ((yi[t] + aw) / (ni + alpha0 - yi[t] - aw)).ln() - ((yj[t] + aw) / (nj + alpha0 - yj[t] - aw)).ln();
        let var = 1.0 / (yi[t] + aw) + 1.0 / (yj[t] + aw);
        let z = delta / var.sqrt();
        if !z.is_finite() {
            skipped.push(token.clone());
            continue;
        }
        tokens.push(FightinToken {
            token: token.clone(),
            z,
            delta,
            rate_i: if ni > 0.0 { yi[t] / ni } else { 0.0 },
            rate_j: if nj > 0.0 { yj[t] / nj } else { 0.0 },
        });
    }
    tokens.sort_by(|a, b| b.z.total_cmp(&a.z).then_with(|| a.token.cmp(&b.token)));
    Ok(FightinWordsResult {
        group_i: labels.0.to_string(),
        group_j: labels.1.to_string(),
        alpha0,
        prior_kind: prior,
        tokens,
        skipped,
    })
}

/// Positive z means the token is characteristic of `group_i`. `alpha0`
/// defaults to 0.01 × |V|, which gives alpha_w = 0.01 under the uniform
/// prior.
pub fn fightin_words(
    m: &WeightMatrix,
    group_i: &str,
    group_j: &str,
    alpha0: Option<f64>,
    prior: PriorKind,
) -> Result<FightinWordsResult, AnalysisError> {
    let yi = m.row(group_i).ok_or_else(|| AnalysisError::UnknownGroup(group_i.into()))?;
    let yj = m.row(group_j).ok_or_else(|| AnalysisError::UnknownGroup(group_j.into()))?;
    score_rows(m, yi, yj, (group_i, group_j), alpha0, prior)
}

/// Label used for the summed non-target rows.
pub const REST_GROUP: &str = "REST";

/// Compares `target` against the elementwise sum of all other rows.
pub fn one_vs_rest_fightin(
    m: &WeightMatrix,
    target: &str,
    alpha0: Option<f64>,
    prior: PriorKind,
) -> Result<FightinWordsResult, AnalysisError> {
    let ti = m.group_index(target).ok_or_else(|| AnalysisError::UnknownGroup(target.into()))?;
    if m.groups.len() < 2 {
        return Err(AnalysisError::DegenerateInput("one-vs-rest needs at least two groups".into()));
    }
    let mut rest = vec![0.0; m.tokens.len()];
    for (gi, row) in m.weights.iter().enumerate() {
        if gi != ti {
            rest.iter_mut().zip(row).for_each(|(r, x)| *r += x);
        }
    }
    score_rows(m, &m.weights[ti], &rest, (target, REST_GROUP), alpha0, prior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe_io::WeightKind;
    use crate::rng::SplitMix64;

    fn matrix(rows: &[(&str, Vec<f64>)], tokens: &[&str]) -> WeightMatrix {
        WeightMatrix {
            kind: WeightKind::Count,
            groups: rows.iter().map(|r| r.0.to_string()).collect(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            weights: rows.iter().map(|r| r.1.clone()).collect(),
        }
    }

    #[test]
    fn identical_rows_give_zero() {
        let m = matrix(&[("A", vec![3.0, 1.0, 0.5]), ("B", vec![3.0, 1.0, 0.5])], &["x", "y", "z"]);
        for prior in [PriorKind::Uniform, PriorKind::Informative] {
            let r = fightin_words(&m, "A", "B", None, prior).unwrap();
            assert!(r.tokens.iter().all(|t| t.z == 0.0));
        }
    }

    #[test]
    fn matches_independent_evaluation() {
        // Values from a separate step-by-step evaluation of the log-odds
        // formula with alpha0 = 0.03 and alpha_w = 0.01.
        let m = matrix(&[("i", vec![10.0, 5.0, 0.0]), ("j", vec![2.0, 8.0, 4.0])], &["a", "b", "c"]);
        let r = fightin_words(&m, "i", "j", None, PriorKind::Uniform).unwrap();
        assert!((r.alpha0 - 0.03).abs() < 1e-15);
        let expected = [("a", 3.2067703089436868, 2.4785918666595688), ("b", -1.7183107483162, -0.9787506823194836), ("c", -0.6390797364473308, -6.398760977985839)];
        for (token, z, delta) in expected {
            let t = r.tokens.iter().find(|t| t.token == token).unwrap();
            assert!((t.z - z).abs() < 1e-9 && (t.delta - delta).abs() < 1e-9, "{token}");
            assert_eq!(t.z.signum(), t.delta.signum());
        }
        assert_eq!(r.tokens.iter().map(|t| t.token.as_str()).collect::<Vec<_>>(), vec!["a", "c", "b"]);
        assert_eq!(r.tokens[0].rate_i, 10.0 / 15.0);
    }

    #[test]
    fn swapping_negates() {
        let m = matrix(&[("i", vec![1.5, 0.25, 7.0, 0.0]), ("j", vec![0.5, 2.0, 3.0, 1.0])], &["a", "b", "c", "d"]);
        for prior in [PriorKind::Uniform, PriorKind::Informative] {
            let ij = fightin_words(&m, "i", "j", Some(0.5), prior).unwrap();
            let ji = fightin_words(&m, "j", "i", Some(0.5), prior).unwrap();
            let back = ji.z_by_token();
            for (t, z) in ij.z_by_token() {
                assert_eq!(z, -back[t]);
            }
        }
    }

    #[test]
    fn scaling_counts_and_alpha_keeps_delta() {
        let m = matrix(&[("i", vec![4.0, 2.0, 1.0]), ("j", vec![1.0, 3.0, 5.0])], &["a", "b", "c"]);
        let mut scaled = m.clone();
        scaled.weights.iter_mut().flatten().for_each(|x| *x *= 7.0);
        let a = fightin_words(&m, "i", "j", Some(0.3), PriorKind::Uniform).unwrap();
        let b = fightin_words(&scaled, "i", "j", Some(2.1), PriorKind::Uniform).unwrap();
        for (x, y) in a.tokens.iter().zip(&b.tokens) {
            assert_eq!(x.token, y.token);
            assert!((x.delta - y.delta).abs() < 1e-12);
        }
    }

    #[test]
    fn column_permutation_invariance() {
        let m = matrix(&[("i", vec![4.0, 2.0, 1.0]), ("j", vec![1.0, 3.0, 5.0])], &["a", "b", "c"]);
        let p = matrix(&[("i", vec![1.0, 4.0, 2.0]), ("j", vec![5.0, 1.0, 3.0])], &["c", "a", "b"]);
        let a = fightin_words(&m, "i", "j", None, PriorKind::Informative).unwrap();
        let b = fightin_words(&p, "i", "j", None, PriorKind::Informative).unwrap();
        assert_eq!(a.z_by_token(), b.z_by_token());
    }

    #[test]
    fn errors() {
        let m = matrix(&[("i", vec![1.0]), ("j", vec![2.0])], &["a"]);
        assert_eq!(fightin_words(&m, "i", "x", None, PriorKind::Uniform), Err(AnalysisError::UnknownGroup("x".into())));
        assert_eq!(fightin_words(&m, "i", "j", Some(0.0), PriorKind::Uniform), Err(AnalysisError::NonpositiveAlpha(0.0)));
    }

    #[test]
    fn one_vs_rest_reductions() {
        let two = matrix(&[("i", vec![4.0, 2.0, 1.0]), ("j", vec![1.0, 3.0, 5.0])], &["a", "b", "c"]);
        let a = one_vs_rest_fightin(&two, "i", None, PriorKind::Uniform).unwrap();
        let b = fightin_words(&two, "i", "j", None, PriorKind::Uniform).unwrap();
        assert_eq!(a.tokens, b.tokens);

        let three = matrix(&[("x", vec![2.0, 1.0]), ("y", vec![2.0, 1.0]), ("z", vec![2.0, 1.0])], &["a", "b"]);
        // The rest row is twice the target row. Rates agree exactly; the
        // prior is not scaled with the row, so z is only close to zero.
        let r = one_vs_rest_fightin(&three, "x", None, PriorKind::Uniform).unwrap();
        assert!(r.tokens.iter().all(|t| t.rate_i == t.rate_j && t.z.abs() < 0.01));
    }

    #[test]
    fn one_vs_rest_matches_explicit_rest_row() {
        let mut rng = SplitMix64::new(12);
        let tokens: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
        let token_refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let rows: Vec<(String, Vec<f64>)> = (0..5).map(|g| (format!("g{g}"), (0..20).map(|_| rng.unit_f64() * 5.0).collect())).collect();
        let m = matrix(&rows.iter().map(|(g, r)| (g.as_str(), r.clone())).collect::<Vec<_>>(), &token_refs);
        let rest: Vec<f64> = (0..20).map(|t| (1..5).map(|g| rows[g].1[t]).sum()).collect();
        // The prior pools over all rows of the input, so the explicit
        // two-row matrix keeps the same column totals.
        let explicit = matrix(&[("g0", rows[0].1.clone()), ("REST", rest)], &token_refs);
        for prior in [PriorKind::Uniform, PriorKind::Informative] {
            let a = one_vs_rest_fightin(&m, "g0", Some(1.0), prior).unwrap();
            let b = fightin_words(&explicit, "g0", "REST", Some(1.0), prior).unwrap();
            for (x, y) in a.tokens.iter().zip(&b.tokens) {
                assert_eq!(x.token, y.token);
                assert!((x.z - y.z).abs() < 1e-9);
            }
        }
    }
}
