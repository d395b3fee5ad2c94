//! CSV, Markdown and SVG renderings of analysis results. Numbers are written
//! with fixed precision so that reruns produce identical files.

use std::fmt::Write as _;

use super::{
    AccuracyReport, ClassStyleMetrics, ConfusionMatrix, Correlation, EmbeddingSimilarityScores, FightinWordsResult,
    ScapegoatShares,
};

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn accuracy_csv(r: &AccuracyReport) -> String {
    let mut rows = vec![vec!["overall".into(), "all".into(), r.overall.n.to_string(), r.overall.correct.to_string(), f6(r.overall.accuracy), f6(r.overall.se)]];
    for (name, cell) in [("in_training", &r.in_training), ("withheld", &r.withheld)] {
        if let Some(c) = cell {
            rows.push(vec!["novel".into(), name.into(), c.n.to_string(), c.correct.to_string(), f6(c.accuracy), f6(c.se)]);
        }
    }
    for (label, c) in &r.by_class {
        rows.push(vec!["class".into(), label.clone(), c.n.to_string(), c.correct.to_string(), f6(c.accuracy), f6(c.se)]);
    }
    csv_bytes(&["scope", "key", "n", "correct", "accuracy", "se"], rows)
}

/// Row-normalized percentages. With `in_set_only` false an extra
/// OUT_OF_SET column is included.
pub fn confusion_csv(m: &ConfusionMatrix, in_set_only: bool) -> String {
    let mut header: Vec<&str> = vec!["true\\predicted"];
    header.extend(m.labels.iter().map(String::as_str));
    let pct = if in_set_only {
        m.in_set_percentages()
    } else {
        header.push(crate::classify::OUT_OF_SET);
        m.full_percentages()
    };
    let rows = m.labels.iter().zip(pct).map(|(l, row)| {
        let mut r = vec![l.clone()];
        r.extend(row.iter().map(|x| format!("{x:.2}")));
        r
    });
    csv_bytes(&header, rows)
}

pub fn out_of_set_csv(m: &ConfusionMatrix) -> String {
    csv_bytes(&["label", "count"], m.out_of_set_strings.iter().map(|(s, c)| vec![s.clone(), c.to_string()]))
}

pub fn scapegoat_csv(s: &ScapegoatShares) -> String {
    let rows = s.cumulative.iter().enumerate().map(|(i, pct)| {
        let (label, count) = s.ranking.get(i).map_or((String::new(), 0), |(l, c)| (l.clone(), *c));
        vec![(i + 1).to_string(), label, count.to_string(), format!("{pct:.2}")]
    });
    csv_bytes(&["n", "class", "misattributions", "cumulative_pct"], rows)
}

pub fn style_metrics_csv(m: &[ClassStyleMetrics]) -> String {
    let rows = m.iter().map(|c| {
        vec![c.class_label.clone(), c.samples_used.to_string(), c.vocab_size.to_string(), format!("{:.4}", c.uniqueness), c.metric_version.to_string()]
    });
    csv_bytes(&["class", "samples_used", "vocab_size", "uniqueness", "metric_version"], rows)
}

pub fn fightin_csv(r: &FightinWordsResult) -> String {
    let rows = r.tokens.iter().map(|t| vec![t.token.clone(), f6(t.z), f6(t.delta), format!("{:.8}", t.rate_i), format!("{:.8}", t.rate_j)]);
    csv_bytes(&["token", "z", "delta", "rate_i", "rate_j"], rows)
}

pub fn embsim_csv(s: &[EmbeddingSimilarityScores]) -> String {
    let rows = s.iter().map(|c| {
        vec![
            c.class_label.clone(),
            f6(c.train_vs_average),
            c.test_vs_train.map(f6).unwrap_or_default(),
            c.test_excerpts.to_string(),
        ]
    });
    csv_bytes(&["class", "train_vs_average", "test_vs_train", "test_excerpts"], rows)
}

/// `x` and `y` columns for a correlation plus the summary row.
pub fn correlation_csv(names: (&str, &str), points: &[(String, f64, f64)], c: &Correlation) -> String {
    let mut rows: Vec<Vec<String>> = points.iter().map(|(k, x, y)| vec![k.clone(), f6(*x), f6(*y)]).collect();
    rows.push(vec!["#pearson_r".into(), f6(c.r), String::new()]);
    rows.push(vec!["#p_value".into(), format!("{:e}", c.p), String::new()]);
    csv_bytes(&["key", names.0, names.1], rows)
}

/// Threshold style used in prose: small p-values are reported as bounds.
pub fn format_p(p: f64) -> String {
    for bound in [1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2] {
        if p < bound {
            return format!("p < {bound:e}");
        }
    }
    format!("p = {p:.3}")
}

pub fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| c.replace('|', "\\|")).collect();
        let _ = writeln!(s, "| {} |", cells.join(" | "));
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bar chart of values in [0, `max`] with optional error bars.
pub fn svg_bar_chart(title: &str, bars: &[(String, f64, Option<f64>)], max: f64) -> String {
    let row_h = 18.0;
    let label_w = 220.0;
    let plot_w = 360.0;
    let height = 40.0 + row_h * bars.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#,
        label_w + plot_w + 60.0
    );
    let _ = writeln!(s, r#"<text x="4" y="16" font-size="13">{}</text>"#, xml_escape(title));
    let scale = if max > 0.0 { plot_w / max } else { 0.0 };
    for (i, (label, v, err)) in bars.iter().enumerate() {
        let y = 28.0 + row_h * i as f64;
        let w = (v.clamp(0.0, max) * scale).max(0.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, label_w - 6.0, y + 12.0, xml_escape(label));
        let _ = writeln!(s, r##"<rect x="{label_w:.1}" y="{y:.1}" width="{w:.2}" height="{:.1}" fill="#4a7ab5"/>"##, row_h - 4.0);
        if let Some(e) = err {
            let (lo, hi) = (((v - e).max(0.0)) * scale, ((v + e).min(max)) * scale);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" x2="{:.2}" y1="{:.1}" y2="{:.1}" stroke="black"/>"#,
                label_w + lo,
                label_w + hi,
                y + (row_h - 4.0) / 2.0,
                y + (row_h - 4.0) / 2.0
            );
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.1}">{v:.3}</text>"#, label_w + w + 4.0, y + 12.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter plot with axis labels; points are scaled to the data range.
pub fn svg_scatter(title: &str, axes: (&str, &str), points: &[(String, f64, f64)]) -> String {
    let (w, h, pad) = (480.0, 360.0, 50.0);
    let range = |f: &dyn Fn(&(String, f64, f64)) -> f64| {
        let lo = points.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, lo + 1.0)
        }
    };
    let (x0, x1) = range(&|p| p.1);
    let (y0, y1) = range(&|p| p.2);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="4" y="16" font-size="13">{}</text>"#, xml_escape(title));
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - pad, w - 10.0, h - pad);
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{}" x2="{pad}" y2="24" stroke="black"/>"#, h - pad);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, w / 2.0, h - 12.0, xml_escape(axes.0));
    let _ = writeln!(s, r#"<text x="12" y="{:.1}" transform="rotate(-90 12 {:.1})" text-anchor="middle">{}</text>"#, h / 2.0, h / 2.0, xml_escape(axes.1));
    for (label, x, y) in points {
        let px = pad + (x - x0) / (x1 - x0) * (w - pad - 20.0);
        let py = h - pad - (y - y0) / (y1 - y0) * (h - pad - 34.0);
        let _ = writeln!(s, r##"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="#b5534a"><title>{}</title></circle>"##, xml_escape(label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_thresholds() {
        assert_eq!(format_p(3e-4), "p < 5e-4");
        assert_eq!(format_p(2e-5), "p < 1e-4");
        assert_eq!(format_p(0.2), "p = 0.200");
    }

    #[test]
    fn markdown_escapes_pipes() {
        let t = markdown_table(&["a", "b"], &[vec!["x|y".into(), "1".into()]]);
        assert_eq!(t, "| a | b |\n|---|---|\n| x\\|y | 1 |\n");
    }

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(csv_bytes(&["k"], vec![vec!["Mystery, Detective".to_string()]]), "k\n\"Mystery, Detective\"\n");
    }

    #[test]
    fn svg_is_escaped() {
        let s = svg_bar_chart("a<b", &[("x&y".into(), 0.5, Some(0.1))], 1.0);
        assert!(s.contains("a&lt;b") && s.contains("x&amp;y"));
    }
}
