use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::records::{AttributeKey, GenerationRecord, LogProbRecord, QaPair, SplitLabel};
use crate::language::LanguageTag;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingVariant {
        profile_id: u64,
        attribute: AttributeKey,
        language: LanguageTag,
    },
    SplitInconsistency { profile_id: u64 },
    DuplicatePairId { pair_id: String },
    EmptyText { pair_id: String, field: &'static str },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingVariant {
                profile_id,
                attribute,
                language,
            } => write!(f, "profile {profile_id} has no {language} pair for `{attribute}`"),
            Violation::SplitInconsistency { profile_id } => {
                write!(f, "profile {profile_id} has pairs in both forget and retain")
            }
            Violation::DuplicatePairId { pair_id } => write!(f, "duplicate pair_id `{pair_id}`"),
            Violation::EmptyText { pair_id, field } => write!(f, "`{pair_id}` has an empty {field}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Language set inferred from the data.
    pub languages: Vec<LanguageTag>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `pairs` form a parallel corpus with a clean forget/retain partition.
///
/// Problems are collected, never raised.
pub fn validate_dataset(pairs: &[QaPair]) -> ValidationReport {
    let languages: BTreeSet<LanguageTag> = pairs.iter().map(|p| p.language).collect();
    let mut violations = Vec::new();

    let mut seen_ids: HashMap<&str, usize> = HashMap::new();
    for p in pairs {
        let n = seen_ids.entry(p.pair_id.as_str()).or_default();
        *n += 1;
        if *n == 2 {
            violations.push(Violation::DuplicatePairId {
                pair_id: p.pair_id.clone(),
            });
        }
        if p.question.trim().is_empty() {
            violations.push(Violation::EmptyText {
                pair_id: p.pair_id.clone(),
                field: "question",
            });
        }
        if p.answer.trim().is_empty() {
            violations.push(Violation::EmptyText {
                pair_id: p.pair_id.clone(),
                field: "answer",
            });
        }
    }

    let mut cells: BTreeMap<(u64, AttributeKey), BTreeSet<LanguageTag>> = BTreeMap::new();
    let mut splits: BTreeMap<u64, BTreeSet<SplitLabel>> = BTreeMap::new();
    for p in pairs {
        cells.entry((p.profile_id, p.attribute)).or_default().insert(p.language);
        splits.entry(p.profile_id).or_default().insert(p.split);
    }
    for ((profile_id, attribute), present) in &cells {
        for lang in languages.difference(present) {
            violations.push(Violation::MissingVariant {
                profile_id: *profile_id,
                attribute: *attribute,
                language: *lang,
            });
        }
    }
    for (profile_id, labels) in &splits {
        if labels.len() > 1 {
            violations.push(Violation::SplitInconsistency {
                profile_id: *profile_id,
            });
        }
    }

    ValidationReport {
        languages: languages.into_iter().collect(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyIssue {
    UnknownPair { pair_id: String },
    LanguageMismatch { pair_id: String, recorded: LanguageTag, dataset: LanguageTag },
    SplitMismatch { pair_id: String, recorded: SplitLabel, dataset: SplitLabel },
}

impl fmt::Display for ConsistencyIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConsistencyIssue::UnknownPair { pair_id } => {
                write!(f, "`{pair_id}` does not exist in the dataset")
            }
            ConsistencyIssue::LanguageMismatch {
                pair_id,
                recorded,
                dataset,
            } => write!(f, "`{pair_id}` recorded as {recorded}, dataset says {dataset}"),
            ConsistencyIssue::SplitMismatch {
                pair_id,
                recorded,
                dataset,
            } => write!(f, "`{pair_id}` recorded as {recorded}, dataset says {dataset}"),
        }
    }
}

/// Cross-checks denormalized language and split labels on generation records.
pub fn check_generations(gens: &[GenerationRecord], pairs: &[QaPair]) -> Vec<ConsistencyIssue> {
    let index: HashMap<&str, &QaPair> = pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let mut issues = Vec::new();
    for g in gens {
        let Some(p) = index.get(g.pair_id.as_str()) else {
            issues.push(ConsistencyIssue::UnknownPair {
                pair_id: g.pair_id.clone(),
            });
            continue;
        };
        if p.language != g.query_language {
            issues.push(ConsistencyIssue::LanguageMismatch {
                pair_id: g.pair_id.clone(),
                recorded: g.query_language,
                dataset: p.language,
            });
        }
        if p.split != g.split {
            issues.push(ConsistencyIssue::SplitMismatch {
                pair_id: g.pair_id.clone(),
                recorded: g.split,
                dataset: p.split,
            });
        }
    }
    issues
}

/// Log-prob records must reference existing pairs with a matching split.
pub fn check_logprobs(records: &[LogProbRecord], pairs: &[QaPair]) -> Vec<ConsistencyIssue> {
    let index: HashMap<&str, &QaPair> = pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let mut issues = Vec::new();
    for r in records {
        match index.get(r.pair_id.as_str()) {
            None => issues.push(ConsistencyIssue::UnknownPair {
                pair_id: r.pair_id.clone(),
            }),
            Some(p) if p.split != r.split => issues.push(ConsistencyIssue::SplitMismatch {
                pair_id: r.pair_id.clone(),
                recorded: r.split,
                dataset: p.split,
            }),
            Some(_) => {}
        }
    }
    issues
}
