//! Score tables in Markdown and CSV. Corpus scores are macro means over
//! per-document scores, printed as percentages with one decimal.

use super::{ObsScores, OrderScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let vs: Vec<f64> = values.collect();
    if vs.is_empty() {
        0.0
    } else {
        vs.iter().sum::<f64>() / vs.len() as f64
    }
}

/// Render grouped order scores. One row per label, columns
/// Match/Desc/Reason/Type/Prov.
pub fn render_order_report(groups: &[(String, Vec<OrderScores>)], format: ReportFormat) -> String {
    let rows: Vec<(String, [f64; 5])> = groups
        .iter()
        .map(|(label, scores)| {
            (
                label.clone(),
                [
                    mean(scores.iter().map(|s| s.match_)),
                    mean(scores.iter().map(|s| s.desc)),
                    mean(scores.iter().map(|s| s.reason)),
                    mean(scores.iter().map(|s| s.type_)),
                    mean(scores.iter().map(|s| s.prov)),
                ],
            )
        })
        .collect();

    match format {
        ReportFormat::Markdown => {
            let mut out = String::from("| Model | Match | Desc | Reason | Type | Prov |\n");
            out.push_str("|---|---|---|---|---|---|\n");
            for (label, m) in &rows {
                out.push_str(&format!(
                    "| {label} | {} | {} | {} | {} | {} |\n",
                    pct(m[0]),
                    pct(m[1]),
                    pct(m[2]),
                    pct(m[3]),
                    pct(m[4])
                ));
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("model,match,desc,reason,type,prov\n");
            for (label, m) in &rows {
                out.push_str(&format!(
                    "{label},{},{},{},{},{}\n",
                    pct(m[0]),
                    pct(m[1]),
                    pct(m[2]),
                    pct(m[3]),
                    pct(m[4])
                ));
            }
            out
        }
    }
}

/// Render grouped observation scores. One row per label, columns P/R/F1.
pub fn render_obs_report(groups: &[(String, Vec<ObsScores>)], format: ReportFormat) -> String {
    let rows: Vec<(String, [f64; 3])> = groups
        .iter()
        .map(|(label, scores)| {
            (
                label.clone(),
                [
                    mean(scores.iter().map(|s| s.precision)),
                    mean(scores.iter().map(|s| s.recall)),
                    mean(scores.iter().map(|s| s.f1)),
                ],
            )
        })
        .collect();

    match format {
        ReportFormat::Markdown => {
            let mut out = String::from("| Model | P | R | F1 |\n|---|---|---|---|\n");
            for (label, m) in &rows {
                out.push_str(&format!("| {label} | {} | {} | {} |\n", pct(m[0]), pct(m[1]), pct(m[2])));
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("model,precision,recall,f1\n");
            for (label, m) in &rows {
                out.push_str(&format!("{label},{},{},{}\n", pct(m[0]), pct(m[1]), pct(m[2])));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(m: f64) -> OrderScores {
        OrderScores { match_: m, desc: m, reason: m, type_: m, prov: m }
    }

    #[test]
    fn perfect_document_renders_100_in_every_column() {
        let md = render_order_report(&[("run".into(), vec![scores(1.0)])], ReportFormat::Markdown);
        let data_row = md.lines().nth(2).unwrap();
        assert_eq!(data_row, "| run | 100.0 | 100.0 | 100.0 | 100.0 | 100.0 |");
    }

    // Mean oracle: (0.6 + 0.8) / 2 = 0.7 → "70.0".
    #[test]
    fn corpus_score_is_the_macro_mean() {
        let md = render_order_report(
            &[("run".into(), vec![scores(0.6), scores(0.8)])],
            ReportFormat::Markdown,
        );
        assert!(md.contains("| run | 70.0 |"), "{md}");
    }

    #[test]
    fn column_order_is_match_desc_reason_type_prov() {
        let md = render_order_report(&[], ReportFormat::Markdown);
        assert!(md.starts_with("| Model | Match | Desc | Reason | Type | Prov |"));
        let csv = render_order_report(&[], ReportFormat::Csv);
        assert!(csv.starts_with("model,match,desc,reason,type,prov"));
    }

    #[test]
    fn observation_report_has_p_r_f1() {
        let rows = vec![(
            "run".to_string(),
            vec![ObsScores { precision: 0.5, recall: 1.0, f1: 2.0 / 3.0 }],
        )];
        let csv = render_obs_report(&rows, ReportFormat::Csv);
        assert!(csv.contains("run,50.0,100.0,66.7"), "{csv}");
    }
}
