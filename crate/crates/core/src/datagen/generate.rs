use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tables::{PoolKind, TranslationTables};
use crate::datamodel::{AttributeKey, Profile, QaPair, SplitLabel};
use crate::language::LanguageTag;

const MAX_RESAMPLES: usize = 1000;
const SPLIT_STREAM: u64 = 1;

const NAMES: &str = include_str!("../../data/names.txt");

/// The bundled English name pool (240 entries).
pub fn bundled_name_pool() -> Vec<String> {
    NAMES
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub seed: u64,
    pub n_profiles: usize,
    pub languages: Vec<LanguageTag>,
    pub forget_profiles: usize,
    pub name_pool: Vec<String>,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            n_profiles: 40,
            languages: LanguageTag::SET_ONE.to_vec(),
            forget_profiles: 2,
            name_pool: bundled_name_pool(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("name pool has {pool} entries but {requested} profiles were requested")]
    NamePoolTooSmall { pool: usize, requested: usize },
    #[error("forget_profiles ({forget}) must be smaller than n_profiles ({total})")]
    ForgetTooLarge { forget: usize, total: usize },
    #[error("language list must include en")]
    EnglishMissing,
    #[error("language list is empty or has duplicates")]
    BadLanguages,
    #[error("no {section} entry for ({attribute}, {language})")]
    MissingCell {
        section: &'static str,
        attribute: AttributeKey,
        language: LanguageTag,
    },
    #[error("could not draw a unique attribute combination for profile {profile_id} after {MAX_RESAMPLES} tries")]
    UniquenessExhausted { profile_id: u64 },
}

impl GenSpec {
    pub fn check(&self) -> Result<(), GenError> {
        let distinct: BTreeSet<_> = self.languages.iter().collect();
        if self.languages.is_empty() || distinct.len() != self.languages.len() {
            return Err(GenError::BadLanguages);
        }
        if !self.languages.contains(&LanguageTag::En) {
            return Err(GenError::EnglishMissing);
        }
        if self.n_profiles > 0 && self.forget_profiles >= self.n_profiles {
            return Err(GenError::ForgetTooLarge {
                forget: self.forget_profiles,
                total: self.n_profiles,
            });
        }
        if self.name_pool.len() < self.n_profiles {
            return Err(GenError::NamePoolTooSmall {
                pool: self.name_pool.len(),
                requested: self.n_profiles,
            });
        }
        Ok(())
    }
}

fn first_missing(tables: &TranslationTables, languages: &[LanguageTag]) -> Option<GenError> {
    tables.missing_cells(languages).into_iter().next().map(|m| GenError::MissingCell {
        section: m.section,
        attribute: m.attribute,
        language: m.language,
    })
}

fn birthday_bounds() -> (NaiveDate, i64) {
    let start = NaiveDate::from_ymd_opt(1950, 1, 1).expect("valid date");
    let end = NaiveDate::from_ymd_opt(2010, 12, 31).expect("valid date");
    (start, (end - start).num_days())
}

/// Draws `n_profiles` profiles whose full seven-attribute tuples are pairwise distinct.
pub fn generate_profiles(spec: &GenSpec, tables: &TranslationTables) -> Result<Vec<Profile>, GenError> {
    spec.check()?;
    if let Some(err) = tables
        .missing_cells(&spec.languages)
        .into_iter()
        .find(|m| m.section == "pools")
        .map(|m| GenError::MissingCell {
            section: m.section,
            attribute: m.attribute,
            language: m.language,
        })
    {
        return Err(err);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let name_idx = rand::seq::index::sample(&mut rng, spec.name_pool.len(), spec.n_profiles);
    let (start, span_days) = birthday_bounds();

    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut profiles = Vec::with_capacity(spec.n_profiles);
    for (i, name_i) in name_idx.into_iter().enumerate() {
        let profile_id = i as u64;
        let mut tuple = None;
        for _ in 0..MAX_RESAMPLES {
            let draw: Vec<i64> = AttributeKey::ALL
                .iter()
                .map(|&attr| match super::tables::pool_kind(attr) {
                    PoolKind::DateRange => rng.gen_range(0..=span_days),
                    PoolKind::Categorical => rng.gen_range(0..tables.pool_len(attr)) as i64,
                })
                .collect();
            if seen.insert(draw.clone()) {
                tuple = Some(draw);
                break;
            }
        }
        let tuple = tuple.ok_or(GenError::UniquenessExhausted { profile_id })?;

        let mut attributes = BTreeMap::new();
        for (&attr, &idx) in AttributeKey::ALL.iter().zip(&tuple) {
            let per_lang: BTreeMap<LanguageTag, String> = spec
                .languages
                .iter()
                .map(|&lang| {
                    let value = match super::tables::pool_kind(attr) {
                        PoolKind::DateRange => {
                            (start + Duration::days(idx)).format("%Y-%m-%d").to_string()
                        }
                        PoolKind::Categorical => tables
                            .pool_values(attr, lang)
                            .expect("checked above")[idx as usize]
                            .clone(),
                    };
                    (lang, value)
                })
                .collect();
            attributes.insert(attr, per_lang);
        }
        profiles.push(Profile {
            profile_id,
            name: spec.name_pool[name_i].clone(),
            attributes,
            extra: Default::default(),
        });
    }
    Ok(profiles)
}

/// Fills every `(attribute, language)` template for every profile. All pairs start as retain.
pub fn render_qa(
    profiles: &[Profile],
    tables: &TranslationTables,
    languages: &[LanguageTag],
) -> Result<Vec<QaPair>, GenError> {
    if let Some(err) = first_missing(tables, languages) {
        return Err(err);
    }
    let mut pairs = Vec::with_capacity(profiles.len() * AttributeKey::ALL.len() * languages.len());
    for profile in profiles {
        for attr in AttributeKey::ALL {
            for &lang in languages {
                let tpl = tables.template(attr, lang).expect("checked above");
                let value = profile.value(attr, lang).ok_or(GenError::MissingCell {
                    section: "profile attributes",
                    attribute: attr,
                    language: lang,
                })?;
                pairs.push(QaPair {
                    pair_id: QaPair::make_id(profile.profile_id, attr, lang),
                    profile_id: profile.profile_id,
                    attribute: attr,
                    language: lang,
                    question: tpl.render_question(&profile.name),
                    answer: tpl.render_answer(&profile.name, value),
                    split: SplitLabel::Retain,
                    extra: Default::default(),
                });
            }
        }
    }
    Ok(pairs)
}

/// Per-language forget/retain counts emitted by [`assign_split`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitSummary {
    pub forget_profile_ids: Vec<u64>,
    pub per_language: BTreeMap<LanguageTag, (usize, usize)>,
}

impl SplitSummary {
    pub fn forget_count(&self, language: LanguageTag) -> usize {
        self.per_language.get(&language).map_or(0, |c| c.0)
    }

    pub fn retain_count(&self, language: LanguageTag) -> usize {
        self.per_language.get(&language).map_or(0, |c| c.1)
    }
}

/// Labels every pair of the first `forget_profiles` shuffled profiles as forget.
pub fn assign_split(mut pairs: Vec<QaPair>, spec: &GenSpec) -> (Vec<QaPair>, SplitSummary) {
    let ids: BTreeSet<u64> = pairs.iter().map(|p| p.profile_id).collect();
    let mut ids: Vec<u64> = ids.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(SPLIT_STREAM);
    ids.shuffle(&mut rng);
    let mut forget: Vec<u64> = ids.into_iter().take(spec.forget_profiles).collect();
    forget.sort_unstable();

    let mut summary = SplitSummary {
        forget_profile_ids: forget.clone(),
        per_language: BTreeMap::new(),
    };
    for p in &mut pairs {
        p.split = if forget.binary_search(&p.profile_id).is_ok() {
            SplitLabel::Forget
        } else {
            SplitLabel::Retain
        };
        let entry = summary.per_language.entry(p.language).or_default();
        match p.split {
            SplitLabel::Forget => entry.0 += 1,
            SplitLabel::Retain => entry.1 += 1,
        }
    }
    (pairs, summary)
}

/// Profiles plus split-labelled QA pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub profiles: Vec<Profile>,
    pub pairs: Vec<QaPair>,
    pub split: SplitSummary,
}

pub fn generate_dataset(spec: &GenSpec, tables: &TranslationTables) -> Result<Dataset, GenError> {
    let profiles = generate_profiles(spec, tables)?;
    let pairs = render_qa(&profiles, tables, &spec.languages)?;
    let (pairs, split) = assign_split(pairs, spec);
    Ok(Dataset {
        profiles,
        pairs,
        split,
    })
}
