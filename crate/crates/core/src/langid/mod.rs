//! Deterministic language identification over short fragments.
//!
//! Two stages: a script vote settles every language whose script is unique within the
//! candidate set; Latin-script text is then scored against bundled frequency profiles.

mod detector;
mod profile;
mod script;

pub use detector::{detect, DetectorConfig, DetectorError, LanguageDetector};
pub use profile::{latin_trigrams, FrequencyProfile, ProfileError, ProfileSource, PROFILE_FORMAT_VERSION};
pub use script::script_of;

pub(crate) mod bundled {
    use std::collections::BTreeMap;
    use std::sync::{Arc, OnceLock};

    use super::{FrequencyProfile, ProfileSource};
    use crate::language::LanguageTag;

    pub const EN: &str = include_str!("../../data/langid/en.json");
    pub const DE: &str = include_str!("../../data/langid/de.json");
    pub const ES: &str = include_str!("../../data/langid/es.json");
    pub const SOURCES: &str = include_str!("../../data/langid/sources.json");

    pub fn profiles() -> &'static BTreeMap<LanguageTag, Arc<FrequencyProfile>> {
        static PROFILES: OnceLock<BTreeMap<LanguageTag, Arc<FrequencyProfile>>> = OnceLock::new();
        PROFILES.get_or_init(|| {
            [(LanguageTag::En, EN), (LanguageTag::De, DE), (LanguageTag::Es, ES)]
                .into_iter()
                .map(|(tag, text)| {
                    let profile = FrequencyProfile::from_json(text)
                        .unwrap_or_else(|e| panic!("bundled {tag} profile is corrupt: {e}"));
                    (tag, Arc::new(profile))
                })
                .collect()
        })
    }

    pub fn sources() -> BTreeMap<LanguageTag, ProfileSource> {
        serde_json::from_str(SOURCES).expect("bundled profile sources parse")
    }
}

/// Curated source lists the bundled profiles are built from.
pub fn bundled_sources() -> std::collections::BTreeMap<crate::language::LanguageTag, ProfileSource> {
    bundled::sources()
}

/// Rebuilds the Latin profiles from the bundled sources, tables and name pool.
///
/// The training corpus renders every question and answer template with every pool value,
/// rotating through the name pool, so each language sees the same English names at the
/// same rate.
pub fn build_bundled_profiles() -> std::collections::BTreeMap<crate::language::LanguageTag, FrequencyProfile>
{
    use crate::datagen::{bundled_name_pool, TranslationTables};
    use crate::language::LanguageTag;

    let tables = TranslationTables::bundled();
    let names = bundled_name_pool();
    let sources = bundled::sources();
    [LanguageTag::En, LanguageTag::De, LanguageTag::Es]
        .into_iter()
        .map(|lang| {
            let corpus = tables.training_corpus(lang, &names);
            let profile =
                FrequencyProfile::build(lang, &sources[&lang], corpus.iter().map(String::as_str));
            (lang, profile)
        })
        .collect()
}

/// Labeled Latin-script fragments (3 to 6 tokens) for measuring detector accuracy.
pub fn labeled_snippets() -> Vec<(crate::language::LanguageTag, String)> {
    include_str!("../../data/langid/snippets.tsv")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (tag, text) = l.split_once('\t').expect("snippet line has a tab");
            (tag.parse().expect("snippet label is a language tag"), text.to_owned())
        })
        .collect()
}
