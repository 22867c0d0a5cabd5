//! Markdown table rendering of per-model metric means.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::batch::EvaluationRecord;
use crate::metrics::COLUMN_HEADERS;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("no records to render")]
    NoRecords,
}

/// Render one row per model: the arithmetic mean of each metric over that
/// model's records, to four decimal places. With more than one model the
/// per-column maximum is bolded.
pub fn render_table(records: &[EvaluationRecord]) -> Result<String, TableError> {
    if records.is_empty() {
        return Err(TableError::NoRecords);
    }

    let mut by_model: BTreeMap<&str, Vec<[f64; 11]>> = BTreeMap::new();
    for record in records {
        by_model
            .entry(record.model_name.as_str())
            .or_default()
            .push(record.metrics.as_row());
    }

    let means: Vec<(&str, [f64; 11])> = by_model
        .into_iter()
        .map(|(model, rows)| {
            let mut mean = [0.0f64; 11];
            for row in &rows {
                for (slot, value) in mean.iter_mut().zip(row) {
                    *slot += value;
                }
            }
            for slot in &mut mean {
                *slot /= rows.len() as f64;
            }
            (model, mean)
        })
        .collect();

    let mut maxima = [f64::NEG_INFINITY; 11];
    for (_, row) in &means {
        for (slot, value) in maxima.iter_mut().zip(row) {
            *slot = slot.max(*value);
        }
    }
    let highlight = means.len() > 1;

    let mut out = String::new();
    out.push_str("| Model |");
    for header in COLUMN_HEADERS {
        out.push_str(&format!(" {header} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(COLUMN_HEADERS.len()));
    out.push('\n');
    for (model, row) in &means {
        out.push_str(&format!("| {model} |"));
        for (value, max) in row.iter().zip(&maxima) {
            let cell = format!("{value:.4}");
            if highlight && value == max {
                out.push_str(&format!(" **{cell}** |"));
            } else {
                out.push_str(&format!(" {cell} |"));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricVector;
    use std::collections::BTreeMap;

    fn record(model: &str, rouge1: f64) -> EvaluationRecord {
        EvaluationRecord {
            sample_id: "s".into(),
            model_name: model.into(),
            summary: crate::summarize::BehaviorSummary {
                sample_id: "s".into(),
                model_name: model.into(),
                sections: vec![],
                raw_completion: String::new(),
                word_count: 0,
            },
            metrics: MetricVector {
                rouge1_f: rouge1,
                rouge2_f: 0.1,
                rouge_l_f: 0.2,
                bertscore_p: 0.3,
                bertscore_r: 0.4,
                bertscore_f1: 0.5,
                semantic_similarity: 0.6,
                readability: 40.0,
                distinct1: 0.7,
                distinct2: 0.8,
                keyphrase_match: 0.9,
            },
            run_meta: BTreeMap::new(),
        }
    }

    #[test]
    fn single_record_mean_is_the_value() {
        let table = render_table(&[record("solo-model", 0.75)]).unwrap();
        assert!(table.contains("| solo-model |"));
        assert!(table.contains(" 0.7500 |"));
        // Single model: no comparative highlighting.
        assert!(!table.contains("**"));
    }

    #[test]
    fn means_are_averaged_to_four_decimals() {
        let table =
            render_table(&[record("m", 0.2), record("m", 0.4)]).unwrap();
        assert!(table.contains(" 0.3000 |"), "table:\n{table}");
    }

    #[test]
    fn header_matches_report_abbreviations() {
        let table = render_table(&[record("m", 0.5)]).unwrap();
        let header = table.lines().next().unwrap();
        assert_eq!(
            header,
            "| Model | R-1 | R-2 | R-L | BS-P | BS-R | BS-F1 | SS | FKR | D-1 | D-2 | KM |"
        );
    }

    #[test]
    fn column_maximum_is_bolded_across_models() {
        let table = render_table(&[record("a-model", 0.25), record("b-model", 0.95)]).unwrap();
        assert!(table.contains("**0.9500**"));
        assert!(!table.contains("**0.2500**"));
        // Tied columns bold both.
        assert!(table.matches("**0.1000**").count() == 2);
    }

    #[test]
    fn no_records_is_an_error() {
        assert!(matches!(render_table(&[]), Err(TableError::NoRecords)));
    }

    #[test]
    fn models_render_in_sorted_order() {
        let table = render_table(&[record("zeta", 0.1), record("alpha", 0.2)]).unwrap();
        let zeta = table.find("zeta").unwrap();
        let alpha = table.find("alpha").unwrap();
        assert!(alpha < zeta);
    }
}
