//! Reference-based metrics: exact match, ROUGE-L knowledge memorization, and the
//! gradient-ascent / gradient-difference loss audit.

use std::collections::BTreeMap;

use unicode_normalization::UnicodeNormalization;

use crate::datamodel::{GenerationRecord, LogProbRecord, SplitLabel};
use crate::language::LanguageTag;
use crate::scalar::{mean, Scalar};
use crate::segmenter::{tokenize_with, TokenizeOptions};

/// 1 iff the NFC-normalized, trimmed strings are identical. Case-sensitive.
pub fn exact_match(output: &str, reference: &str) -> u8 {
    let a: String = output.trim().nfc().collect();
    let b: String = reference.trim().nfc().collect();
    u8::from(a == b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeScore<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub lcs_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RougeOptions {
    pub lowercase: bool,
    pub keep_punctuation: bool,
}

impl Default for RougeOptions {
    fn default() -> Self {
        Self {
            lowercase: true,
            keep_punctuation: false,
        }
    }
}

/// Which ROUGE-L component KM averages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KmStatistic {
    #[default]
    F1,
    Recall,
}

/// Tokens ROUGE-L compares: NFC, then optional lowercasing, then script segmentation.
pub fn rouge_tokens(text: &str, options: &RougeOptions) -> Vec<String> {
    let mut text: String = text.nfc().collect();
    if options.lowercase {
        text = text.to_lowercase();
    }
    let seq = tokenize_with(
        &text,
        TokenizeOptions {
            keep_punctuation: options.keep_punctuation,
        },
    );
    seq.texts().map(str::to_owned).collect()
}

/// Length of the longest common subsequence, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_len<E: PartialEq>(a: &[E], b: &[E]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L over token sequences. Two empty sequences are identical and score 1;
/// otherwise an empty side gives 0.
pub fn rouge_l_tokens<T: Scalar, E: PartialEq>(output: &[E], reference: &[E]) -> RougeScore<T> {
    if output.is_empty() && reference.is_empty() {
        return RougeScore {
            precision: T::one(),
            recall: T::one(),
            f1: T::one(),
            lcs_len: 0,
        };
    }
    let lcs = lcs_len(output, reference);
    let ratio = |den: usize| {
        if den == 0 {
            T::zero()
        } else {
            T::of_usize(lcs) / T::of_usize(den)
        }
    };
    let precision = ratio(output.len());
    let recall = ratio(reference.len());
    let sum = precision + recall;
    let f1 = if sum > T::zero() {
        T::of(2.0) * precision * recall / sum
    } else {
        T::zero()
    };
    RougeScore {
        precision,
        recall,
        f1,
        lcs_len: lcs,
    }
}

/// ROUGE-L with default options. Segmentation follows each codepoint's script, so
/// `lang` does not change the result; it names the language the pair is scored under.
pub fn rouge_l<T: Scalar>(output: &str, reference: &str, lang: LanguageTag) -> RougeScore<T> {
    let _ = lang;
    rouge_l_with(output, reference, &RougeOptions::default())
}

pub fn rouge_l_with<T: Scalar>(output: &str, reference: &str, options: &RougeOptions) -> RougeScore<T> {
    rouge_l_tokens(&rouge_tokens(output, options), &rouge_tokens(reference, options))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    pub rouge: RougeOptions,
    pub km: KmStatistic,
}

/// EM and KM means for one `(query_language, split)` group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupScores<T> {
    pub em: T,
    pub km: T,
    pub n_records: usize,
}

pub type GroupKey = (LanguageTag, SplitLabel);

/// Scores every record and averages per group. Empty outputs count (EM 0, KM 0).
pub fn score_corpus<T: Scalar>(
    records: &[GenerationRecord],
    options: &ScoreOptions,
) -> BTreeMap<GroupKey, GroupScores<T>> {
    let mut groups: BTreeMap<GroupKey, (Vec<T>, Vec<T>)> = BTreeMap::new();
    for r in records {
        let em = T::of_usize(exact_match(&r.output, &r.reference).into());
        let rouge: RougeScore<T> = rouge_l_with(&r.output, &r.reference, &options.rouge);
        let km = match options.km {
            KmStatistic::F1 => rouge.f1,
            KmStatistic::Recall => rouge.recall,
        };
        let g = groups.entry((r.query_language, r.split)).or_default();
        g.0.push(em);
        g.1.push(km);
    }
    groups
        .into_iter()
        .map(|(k, (em, km))| {
            let n_records = em.len();
            let scores = GroupScores {
                em: mean(em).unwrap(),
                km: mean(km).unwrap(),
                n_records,
            };
            (k, scores)
        })
        .collect()
}

pub fn em_score<T: Scalar>(records: &[GenerationRecord]) -> BTreeMap<GroupKey, T> {
    score_corpus(records, &ScoreOptions::default())
        .into_iter()
        .map(|(k, s)| (k, s.em))
        .collect()
}

pub fn km_score<T: Scalar>(records: &[GenerationRecord]) -> BTreeMap<GroupKey, T> {
    score_corpus(records, &ScoreOptions::default())
        .into_iter()
        .map(|(k, s)| (k, s.km))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossVariant {
    Ga,
    Gd,
}

impl std::str::FromStr for LossVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ga" => Ok(Self::Ga),
            "gd" => Ok(Self::Gd),
            other => Err(format!("unknown loss variant {other:?} (expected ga or gd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossAudit<T> {
    pub variant: LossVariant,
    pub alpha: T,
    pub forget_term: T,
    pub retain_term: T,
    pub total: T,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossAuditError {
    #[error("alpha must be a positive finite number, got {0}")]
    BadAlpha(f64),
    #[error("no {0} records to average")]
    MissingSplit(SplitLabel),
}

/// Recomputes the unlearning objective from supplied per-pair log-likelihoods.
pub fn loss_audit<T: Scalar>(
    records: &[LogProbRecord],
    alpha: T,
    variant: LossVariant,
) -> Result<LossAudit<T>, LossAuditError> {
    if !(alpha.is_finite() && alpha > T::zero()) {
        return Err(LossAuditError::BadAlpha(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    let split_mean = |split| {
        mean(records.iter().filter(|r| r.split == split).map(|r| T::of(r.log_likelihood)))
            .ok_or(LossAuditError::MissingSplit(split))
    };
    let forget_term = split_mean(SplitLabel::Forget)?;
    let (retain_term, total) = match variant {
        LossVariant::Ga => (T::zero(), alpha * forget_term),
        LossVariant::Gd => {
            let retain = split_mean(SplitLabel::Retain)?;
            (retain, alpha * forget_term - retain)
        }
    };
    Ok(LossAudit {
        variant,
        alpha,
        forget_term,
        retain_term,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_match_rules() {
        let s = "Kim was born on 1987-03-02.";
        assert_eq!(exact_match(s, s), 1);
        assert_eq!(exact_match("kim was born on 1987-03-02.", s), 0);
        assert_eq!(exact_match("  X ", "X"), 1);
        assert_eq!(exact_match("e\u{301}", "\u{e9}"), 1);
    }

    #[test]
    fn rouge_examples() {
        let r: RougeScore<f64> = rouge_l("a b c d", "a c d e", LanguageTag::En);
        assert_eq!(r.lcs_len, 3);
        assert_abs_diff_eq!(r.precision, 0.75);
        assert_abs_diff_eq!(r.recall, 0.75);
        assert_abs_diff_eq!(r.f1, 0.75);

        let same: RougeScore<f64> = rouge_l("Lives in Tokyo.", "lives in tokyo", LanguageTag::En);
        assert_eq!(same.f1, 1.0);

        let disjoint: RougeScore<f64> = rouge_l("alpha beta", "gamma delta", LanguageTag::En);
        assert_eq!(disjoint.f1, 0.0);
    }

    #[test]
    fn han_compares_codepoints() {
        let r: RougeScore<f64> = rouge_l("他住在东京", "她住在东京", LanguageTag::Zh);
        assert_eq!(r.lcs_len, 4);
        assert_abs_diff_eq!(r.f1, 0.8);
    }

    #[test]
    fn empty_output_scores_zero() {
        let r: RougeScore<f64> = rouge_l("", "something here", LanguageTag::En);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let both: RougeScore<f64> = rouge_l("", "", LanguageTag::En);
        assert_eq!(both.f1, 1.0);
    }

    #[test]
    fn loss_audit_examples() {
        let rec = |split, ll| LogProbRecord {
            pair_id: "p".into(),
            split,
            log_likelihood: ll,
            extra: Default::default(),
        };
        let ga = loss_audit(&[rec(SplitLabel::Forget, -2.0)], 1.0, LossVariant::Ga).unwrap();
        assert_eq!(ga.total, -2.0);
        assert_eq!(ga.retain_term, 0.0);

        let corpus = [rec(SplitLabel::Forget, -2.0), rec(SplitLabel::Retain, -0.5)];
        let gd = loss_audit(&corpus, 0.5, LossVariant::Gd).unwrap();
        assert_eq!(gd.total, -0.5);

        let only_forget = [rec(SplitLabel::Forget, -2.0)];
        assert_eq!(
            loss_audit(&only_forget, 0.5, LossVariant::Gd),
            Err(LossAuditError::MissingSplit(SplitLabel::Retain))
        );
        assert!(matches!(loss_audit(&only_forget, 0.0, LossVariant::Ga), Err(LossAuditError::BadAlpha(_))));
    }
}
