use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::records::SplitLabel;
use crate::language::LanguageTag;

/// One `(model, language, split)` row. Absent metrics stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model_id: String,
    pub query_language: LanguageTag,
    pub split: SplitLabel,
    pub em: Option<f64>,
    pub km: Option<f64>,
    pub nmix_avg: Option<f64>,
    pub judge_ratio: Option<f64>,
    pub n_records: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("duplicate row for ({model_id}, {language}, {split})")]
    Duplicate {
        model_id: String,
        language: LanguageTag,
        split: SplitLabel,
    },
    #[error("{metric} = {value} is outside [{lo}, {hi}] for ({model_id}, {language}, {split})")]
    OutOfRange {
        metric: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
        model_id: String,
        language: LanguageTag,
        split: SplitLabel,
    },
}

/// Per-language, per-split metric table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn new(mut rows: Vec<MetricRow>) -> Result<Self, ReportError> {
        let mut keys = BTreeSet::new();
        for row in &rows {
            if !keys.insert((row.model_id.clone(), row.query_language, row.split)) {
                return Err(ReportError::Duplicate {
                    model_id: row.model_id.clone(),
                    language: row.query_language,
                    split: row.split,
                });
            }
            let checks = [
                ("em", row.em, 1.0),
                ("km", row.km, 1.0),
                ("nmix_avg", row.nmix_avg, 100.0),
                ("judge_ratio", row.judge_ratio, 1.0),
            ];
            for (metric, value, hi) in checks {
                if let Some(v) = value {
                    if !(0.0..=hi).contains(&v) {
                        return Err(ReportError::OutOfRange {
                            metric,
                            value: v,
                            lo: 0.0,
                            hi,
                            model_id: row.model_id.clone(),
                            language: row.query_language,
                            split: row.split,
                        });
                    }
                }
            }
        }
        rows.sort_by(|a, b| {
            (&a.model_id, a.query_language, a.split).cmp(&(&b.model_id, b.query_language, b.split))
        });
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn get(&self, model_id: &str, language: LanguageTag, split: SplitLabel) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.model_id == model_id && r.query_language == language && r.split == split)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lang: LanguageTag, em: f64) -> MetricRow {
        MetricRow {
            model_id: "m".into(),
            query_language: lang,
            split: SplitLabel::Forget,
            em: Some(em),
            km: None,
            nmix_avg: None,
            judge_ratio: None,
            n_records: 1,
        }
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(MetricReport::new(vec![row(LanguageTag::En, 0.5), row(LanguageTag::De, 1.0)]).is_ok());
        assert!(matches!(
            MetricReport::new(vec![row(LanguageTag::En, 0.5), row(LanguageTag::En, 0.1)]),
            Err(ReportError::Duplicate { .. })
        ));
        assert!(matches!(
            MetricReport::new(vec![row(LanguageTag::En, 1.5)]),
            Err(ReportError::OutOfRange { metric: "em", .. })
        ));
    }
}
