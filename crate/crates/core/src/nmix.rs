//! N-gram language-mix score.
//!
//! For each order `n`, a sentence is cut into overlapping n-token fragments, each fragment
//! is language-detected, and the score is the percentage of detected fragments whose
//! language differs from the query language. Fragments the detector declines (digits,
//! punctuation) are dropped. The multi-level score is the plain mean over orders.

use std::collections::BTreeMap;

use crate::datamodel::{GenerationRecord, SplitLabel};
use crate::langid::LanguageDetector;
use crate::language::LanguageTag;
use crate::scalar::{mean, Scalar};
use crate::segmenter::{ngrams, ScriptTokenizer, SegmentError, Tokenizer};

pub const DEFAULT_LEVELS: [usize; 4] = [3, 4, 5, 6];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NMixError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("at least one n-gram level is required")]
    EmptyLevels,
}

impl From<SegmentError> for NMixError {
    fn from(_: SegmentError) -> Self {
        NMixError::ZeroOrder
    }
}

/// Fragment tallies for one order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FragmentCounts {
    pub mismatched: usize,
    pub retained: usize,
    pub dropped: usize,
}

impl FragmentCounts {
    /// Percentage of retained fragments not detected as the query language.
    pub fn score<T: Scalar>(&self) -> Option<T> {
        (self.retained > 0)
            .then(|| T::hundred() * T::of_usize(self.mismatched) / T::of_usize(self.retained))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NMixResult<T> {
    pub per_n: BTreeMap<usize, T>,
    /// Mean of `per_n`; zero when `skipped`.
    pub avg: T,
    pub fragments_scored: BTreeMap<usize, usize>,
    /// No level had a detectable fragment.
    pub skipped: bool,
}

impl<T: Scalar> NMixResult<T> {
    pub fn value(&self) -> Option<T> {
        (!self.skipped).then_some(self.avg)
    }
}

/// Scores sentences with a configurable tokenizer, detector and level set.
pub struct NMixScorer<'a, D: ?Sized, K = ScriptTokenizer> {
    detector: &'a D,
    tokenizer: K,
    levels: Vec<usize>,
}

impl<'a, D: LanguageDetector + ?Sized> NMixScorer<'a, D, ScriptTokenizer> {
    pub fn new(detector: &'a D, levels: &[usize]) -> Result<Self, NMixError> {
        Self::with_tokenizer(detector, ScriptTokenizer::default(), levels)
    }
}

impl<'a, D: LanguageDetector + ?Sized, K: Tokenizer> NMixScorer<'a, D, K> {
    pub fn with_tokenizer(detector: &'a D, tokenizer: K, levels: &[usize]) -> Result<Self, NMixError> {
        if levels.is_empty() {
            return Err(NMixError::EmptyLevels);
        }
        if levels.contains(&0) {
            return Err(NMixError::ZeroOrder);
        }
        if levels.iter().any(|&n| n < 3) {
            log::warn!("n-gram levels below 3 are unreliable for short-fragment detection: {levels:?}");
        }
        let mut levels = levels.to_vec();
        levels.sort_unstable();
        levels.dedup();
        Ok(Self {
            detector,
            tokenizer,
            levels,
        })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn counts(&self, sentence: &str, n: usize, query: LanguageTag) -> Result<FragmentCounts, NMixError> {
        let seq = self.tokenizer.tokenize(sentence);
        count_fragments(&seq, n, query, self.detector)
    }

    pub fn score<T: Scalar>(&self, sentence: &str, query: LanguageTag) -> NMixResult<T> {
        let seq = self.tokenizer.tokenize(sentence);
        let mut per_n = BTreeMap::new();
        let mut fragments_scored = BTreeMap::new();
        for &n in &self.levels {
            let counts = count_fragments(&seq, n, query, self.detector).expect("levels validated");
            fragments_scored.insert(n, counts.retained);
            if let Some(s) = counts.score::<T>() {
                per_n.insert(n, s);
            }
        }
        let avg = mean(per_n.values().copied());
        NMixResult {
            skipped: avg.is_none(),
            avg: avg.unwrap_or_else(T::zero),
            per_n,
            fragments_scored,
        }
    }
}

fn count_fragments<D: LanguageDetector + ?Sized>(
    seq: &crate::segmenter::TokenSequence,
    n: usize,
    query: LanguageTag,
    detector: &D,
) -> Result<FragmentCounts, NMixError> {
    let mut counts = FragmentCounts::default();
    for fragment in ngrams(seq, n)? {
        match detector.detect(&fragment) {
            None => counts.dropped += 1,
            Some(lang) => {
                counts.retained += 1;
                if lang != query {
                    counts.mismatched += 1;
                }
            }
        }
    }
    Ok(counts)
}

/// Score for a single order, `None` when no fragment was detectable.
pub fn nmix_n<T: Scalar, D: LanguageDetector + ?Sized>(
    sentence: &str,
    n: usize,
    query: LanguageTag,
    detector: &D,
) -> Result<Option<T>, NMixError> {
    if n == 0 {
        return Err(NMixError::ZeroOrder);
    }
    if n < 3 {
        log::warn!("n = {n} is below the recommended minimum of 3");
    }
    let seq = crate::segmenter::tokenize(sentence);
    Ok(count_fragments(&seq, n, query, detector)?.score())
}

/// Mean of [`nmix_n`] over `levels`, skipping levels with no detectable fragment.
pub fn nmix_avg<T: Scalar, D: LanguageDetector + ?Sized>(
    sentence: &str,
    levels: &[usize],
    query: LanguageTag,
    detector: &D,
) -> Result<NMixResult<T>, NMixError> {
    Ok(NMixScorer::new(detector, levels)?.score(sentence, query))
}

/// Corpus aggregate for one `(language, split)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusNMix<T> {
    /// Mean over non-skipped records; `None` if all were skipped.
    pub mean: Option<T>,
    pub n_records: usize,
    pub n_skipped: usize,
}

/// Per-record multi-level scores, then the per-group mean over non-skipped records.
pub fn nmix_corpus<T: Scalar, D: LanguageDetector + ?Sized>(
    records: &[GenerationRecord],
    levels: &[usize],
    detector: &D,
) -> Result<BTreeMap<(LanguageTag, SplitLabel), CorpusNMix<T>>, NMixError> {
    let scorer = NMixScorer::new(detector, levels)?;
    let mut groups: BTreeMap<(LanguageTag, SplitLabel), (Vec<T>, usize, usize)> = BTreeMap::new();
    for r in records {
        let result = scorer.score::<T>(&r.output, r.query_language);
        let g = groups.entry((r.query_language, r.split)).or_default();
        g.1 += 1;
        match result.value() {
            Some(v) => g.0.push(v),
            None => g.2 += 1,
        }
    }
    Ok(groups
        .into_iter()
        .map(|(k, (scores, n_records, n_skipped))| {
            (
                k,
                CorpusNMix {
                    mean: mean(scores),
                    n_records,
                    n_skipped,
                },
            )
        })
        .collect())
}
