use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::profile::{latin_trigrams, FrequencyProfile};
use super::script::script_of;
use crate::language::{LanguageTag, ScriptClass};
use crate::segmenter::tokenize;

const MARKER_WEIGHT: f64 = 3.0;
const STOPWORD_WEIGHT: f64 = 2.0;

/// Anything that maps a fragment to a language or declines to.
pub trait LanguageDetector: Sync {
    fn detect(&self, text: &str) -> Option<LanguageTag>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectorError {
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("no frequency profile for Latin candidate {0}")]
    MissingProfile(LanguageTag),
}

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    candidates: BTreeSet<LanguageTag>,
    latin_profiles: BTreeMap<LanguageTag, Arc<FrequencyProfile>>,
    min_alphabetic_chars: usize,
}

impl DetectorConfig {
    /// Detector restricted to `candidates`, using the bundled Latin profiles.
    pub fn new(candidates: impl IntoIterator<Item = LanguageTag>) -> Result<Self, DetectorError> {
        Self::with_profiles(candidates, super::bundled::profiles().clone())
    }

    pub fn with_profiles(
        candidates: impl IntoIterator<Item = LanguageTag>,
        latin_profiles: BTreeMap<LanguageTag, Arc<FrequencyProfile>>,
    ) -> Result<Self, DetectorError> {
        let candidates: BTreeSet<_> = candidates.into_iter().collect();
        if candidates.is_empty() {
            return Err(DetectorError::NoCandidates);
        }
        if let Some(&missing) = candidates
            .iter()
            .find(|c| c.script() == ScriptClass::Latin && !latin_profiles.contains_key(c))
        {
            return Err(DetectorError::MissingProfile(missing));
        }
        Ok(Self {
            candidates,
            latin_profiles,
            min_alphabetic_chars: 1,
        })
    }

    pub fn with_min_alphabetic_chars(mut self, min: usize) -> Self {
        self.min_alphabetic_chars = min;
        self
    }

    pub fn candidates(&self) -> &BTreeSet<LanguageTag> {
        &self.candidates
    }

    pub fn min_alphabetic_chars(&self) -> usize {
        self.min_alphabetic_chars
    }

    /// Latin-stage score of `text` for one candidate; exposed for diagnostics.
    pub fn latin_score(&self, text: &str, language: LanguageTag) -> Option<f64> {
        let profile = self.latin_profiles.get(&language)?;
        Some(score_latin(text, profile))
    }
}

impl LanguageDetector for DetectorConfig {
    fn detect(&self, text: &str) -> Option<LanguageTag> {
        detect(text, self)
    }
}

fn score_latin(text: &str, profile: &FrequencyProfile) -> f64 {
    let lower = text.to_lowercase();
    let markers: f64 = lower
        .chars()
        .filter_map(|c| profile.markers.get(&c))
        .sum();
    let stopwords: f64 = tokenize(&lower)
        .texts()
        .filter_map(|t| profile.stopwords.get(t))
        .sum();
    let trigrams = latin_trigrams(&lower);
    let trigram_mean = if trigrams.is_empty() {
        0.0
    } else {
        trigrams.iter().map(|t| profile.trigram_logfreq(t)).sum::<f64>() / trigrams.len() as f64
    };
    MARKER_WEIGHT * markers + STOPWORD_WEIGHT * stopwords + trigram_mean
}

/// Detects the language of `text` among the configured candidates.
///
/// Stage 1 counts codepoints per script. Scripts that belong to exactly one candidate
/// (Han, Hangul, Cyrillic, Devanagari, Thai) outrank Latin: the most frequent of them wins,
/// ties broken Han < Hangul < Cyrillic < Devanagari < Thai. Latin letters only decide when
/// no such script is present, in which case every Latin candidate is scored by weighted
/// marker characters, stopwords and mean trigram log-frequency (ties: en < de < es).
/// Returns `None` when fewer than `min_alphabetic_chars` scripted codepoints are present or
/// no candidate matches the scripts that are.
pub fn detect(text: &str, config: &DetectorConfig) -> Option<LanguageTag> {
    let mut counts = [0usize; 6];
    let mut scripted = 0usize;
    for c in text.chars() {
        if let Some(script) = script_of(c) {
            scripted += 1;
            let slot = ScriptClass::PRIORITY.iter().position(|s| *s == script).expect("listed");
            counts[slot] += 1;
        }
    }
    if scripted == 0 || scripted < config.min_alphabetic_chars {
        return None;
    }

    let mut best: Option<(usize, LanguageTag)> = None;
    for (slot, script) in ScriptClass::PRIORITY.iter().enumerate() {
        let Some(lang) = script.unique_language() else { continue };
        if counts[slot] == 0 || !config.candidates.contains(&lang) {
            continue;
        }
        if best.is_none_or(|(n, _)| counts[slot] > n) {
            best = Some((counts[slot], lang));
        }
    }
    if let Some((_, lang)) = best {
        return Some(lang);
    }

    let latin = counts[ScriptClass::PRIORITY.len() - 1];
    if latin == 0 {
        return None;
    }
    let mut winner: Option<(f64, LanguageTag)> = None;
    for lang in [LanguageTag::En, LanguageTag::De, LanguageTag::Es] {
        if !config.candidates.contains(&lang) {
            continue;
        }
        let profile = &config.latin_profiles[&lang];
        let score = score_latin(text, profile);
        if winner.is_none_or(|(s, _)| score > s) {
            winner = Some((score, lang));
        }
    }
    winner.map(|(_, lang)| lang)
}
