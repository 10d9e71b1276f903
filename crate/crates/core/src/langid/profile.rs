use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::language::{LanguageTag, ScriptClass};
use crate::segmenter::tokenize;

pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// Character-level model of one Latin-script language.
///
/// Stored as JSON:
/// `{"format_version":1,"language":"de","markers":{"ß":1.0},"stopwords":{"und":1.0},
///   "unseen_logfreq":-9.2,"trigrams":{" un":-4.1}}`.
/// Trigram keys are three codepoints of a lowercased word padded with one space on each
/// side; values are natural-log relative frequencies. `unseen_logfreq` scores trigrams
/// absent from the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub format_version: u32,
    pub language: LanguageTag,
    pub markers: BTreeMap<char, f64>,
    pub stopwords: BTreeMap<String, f64>,
    pub unseen_logfreq: f64,
    pub trigrams: BTreeMap<String, f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("profile JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("profile for {language}: {reason}")]
    Invalid { language: LanguageTag, reason: String },
}

/// Hand-curated inputs for one language: marker characters, stopwords and a word list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileSource {
    pub markers: BTreeMap<char, f64>,
    pub stopwords: Vec<String>,
    pub words: Vec<String>,
}

/// Padded trigrams of every Latin-script token in `text`, lowercased.
pub fn latin_trigrams(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for token in tokenize(text).tokens() {
        if crate::langid::script_of(token.text.chars().next().unwrap_or(' '))
            != Some(ScriptClass::Latin)
        {
            continue;
        }
        let padded: Vec<char> = std::iter::once(' ')
            .chain(token.text.to_lowercase().chars())
            .chain(std::iter::once(' '))
            .collect();
        for w in padded.windows(3) {
            out.push(w.iter().collect());
        }
    }
    out
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl FrequencyProfile {
    /// Builds a profile from curated source lists plus a training corpus.
    pub fn build<'a>(
        language: LanguageTag,
        source: &'a ProfileSource,
        corpus: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let words = source.words.iter().chain(source.stopwords.iter()).map(String::as_str);
        for text in words.chain(corpus) {
            for tri in latin_trigrams(text) {
                *counts.entry(tri).or_default() += 1;
            }
        }
        let total: u64 = counts.values().sum();
        let total = total.max(1) as f64;
        let trigrams = counts
            .into_iter()
            .map(|(k, c)| (k, round6((c as f64 / total).ln())))
            .collect();
        FrequencyProfile {
            format_version: PROFILE_FORMAT_VERSION,
            language,
            markers: source.markers.clone(),
            stopwords: source
                .stopwords
                .iter()
                .map(|w| (w.to_lowercase(), 1.0))
                .collect(),
            unseen_logfreq: round6((0.5 / total).ln()),
            trigrams,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let profile: FrequencyProfile = serde_json::from_str(text)?;
        profile.check()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }

    fn check(&self) -> Result<(), ProfileError> {
        let invalid = |reason: String| ProfileError::Invalid {
            language: self.language,
            reason,
        };
        if self.language.script() != ScriptClass::Latin {
            return Err(invalid("only Latin-script languages use frequency profiles".into()));
        }
        if self.format_version != PROFILE_FORMAT_VERSION {
            return Err(invalid(format!("unsupported format_version {}", self.format_version)));
        }
        if !self.unseen_logfreq.is_finite() {
            return Err(invalid("unseen_logfreq is not finite".into()));
        }
        if let Some((k, _)) = self.trigrams.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("trigram {k:?} has a non-finite value")));
        }
        Ok(())
    }

    pub fn trigram_logfreq(&self, trigram: &str) -> f64 {
        self.trigrams.get(trigram).copied().unwrap_or(self.unseen_logfreq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigrams_are_padded_and_lowercased() {
        assert_eq!(latin_trigrams("Ab"), vec![" ab", "ab "]);
        assert_eq!(latin_trigrams("der 1987 天"), vec![" de", "der", "er "]);
    }

    #[test]
    fn rejects_non_finite_tables() {
        let src = ProfileSource {
            markers: BTreeMap::new(),
            stopwords: vec!["the".into()],
            words: vec!["cat".into()],
        };
        let mut p = FrequencyProfile::build(LanguageTag::En, &src, []);
        assert!(FrequencyProfile::from_json(&p.to_json()).is_ok());
        p.unseen_logfreq = f64::NAN;
        // NaN serializes as null, which fails to parse back as a number.
        assert!(FrequencyProfile::from_json(&p.to_json()).is_err());
    }
}
