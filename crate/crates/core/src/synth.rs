//! Synthetic "models": deterministic generation fixtures standing in for unlearned LLMs.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::datamodel::{AttributeKey, GenerationRecord, QaPair, SplitLabel};
use crate::language::LanguageTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    /// Output equals the reference.
    Identity,
    /// Output is the parallel reference in the given language, whatever the query language.
    Confused(LanguageTag),
    /// Fixed refusal in the query language.
    Refusal,
    /// Reference on retain pairs, refusal on forget pairs.
    ForgetAware,
    /// Forget-aware, but every output (answer or refusal) comes out in the given language.
    ForgetAwareConfused(LanguageTag),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("unknown behavior `{0}` (expected identity, confused:<lang>, refusal, forget-aware, forget-aware+confused:<lang>)")]
    UnknownBehavior(String),
    #[error("confusion target {0} is not a language of the dataset")]
    TargetNotInDataset(LanguageTag),
    #[error("pair {pair_id} has no parallel answer in {language}")]
    MissingParallel { pair_id: String, language: LanguageTag },
}

impl Behavior {
    pub fn model_id(&self) -> String {
        match self {
            Behavior::Identity => "synth-identity".into(),
            Behavior::Confused(l) => format!("synth-confused-{l}"),
            Behavior::Refusal => "synth-refusal".into(),
            Behavior::ForgetAware => "synth-forget-aware".into(),
            Behavior::ForgetAwareConfused(l) => format!("synth-forget-aware-confused-{l}"),
        }
    }

    fn target(&self) -> Option<LanguageTag> {
        match self {
            Behavior::Confused(l) | Behavior::ForgetAwareConfused(l) => Some(*l),
            _ => None,
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behavior::Identity => f.write_str("identity"),
            Behavior::Confused(l) => write!(f, "confused:{l}"),
            Behavior::Refusal => f.write_str("refusal"),
            Behavior::ForgetAware => f.write_str("forget-aware"),
            Behavior::ForgetAwareConfused(l) => write!(f, "forget-aware+confused:{l}"),
        }
    }
}

impl FromStr for Behavior {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SynthError::UnknownBehavior(s.to_owned());
        let lang = |code: &str| code.parse::<LanguageTag>().map_err(|_| unknown());
        match s {
            "identity" => Ok(Behavior::Identity),
            "refusal" => Ok(Behavior::Refusal),
            "forget-aware" => Ok(Behavior::ForgetAware),
            _ => {
                if let Some(code) = s.strip_prefix("forget-aware+confused:") {
                    Ok(Behavior::ForgetAwareConfused(lang(code)?))
                } else if let Some(code) = s.strip_prefix("confused:") {
                    Ok(Behavior::Confused(lang(code)?))
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

pub fn refusal(language: LanguageTag) -> &'static str {
    match language {
        LanguageTag::En => "I don't know.",
        LanguageTag::De => "Das weiß ich nicht.",
        LanguageTag::Es => "No lo sé.",
        LanguageTag::Zh => "我不知道。",
        LanguageTag::Ru => "Я не знаю.",
        LanguageTag::Ko => "모르겠습니다.",
        LanguageTag::Hi => "मुझे नहीं पता।",
        LanguageTag::Th => "ฉันไม่ทราบ",
    }
}

/// Produces one generation per QA pair, in input order. No randomness is involved, so
/// the output does not depend on any seed.
pub fn synthesize(pairs: &[QaPair], behavior: Behavior) -> Result<Vec<GenerationRecord>, SynthError> {
    let languages: BTreeSet<LanguageTag> = pairs.iter().map(|p| p.language).collect();
    if let Some(target) = behavior.target() {
        if !languages.contains(&target) {
            return Err(SynthError::TargetNotInDataset(target));
        }
    }
    let parallel: HashMap<(u64, AttributeKey, LanguageTag), &str> = pairs
        .iter()
        .map(|p| ((p.profile_id, p.attribute, p.language), p.answer.as_str()))
        .collect();
    let answer_in = |p: &QaPair, language: LanguageTag| {
        parallel
            .get(&(p.profile_id, p.attribute, language))
            .map(|s| s.to_string())
            .ok_or_else(|| SynthError::MissingParallel {
                pair_id: p.pair_id.clone(),
                language,
            })
    };
    let model_id = behavior.model_id();
    pairs
        .iter()
        .map(|p| {
            let forget = p.split == SplitLabel::Forget;
            let output = match behavior {
                Behavior::Identity => p.answer.clone(),
                Behavior::Confused(l) => answer_in(p, l)?,
                Behavior::Refusal => refusal(p.language).to_owned(),
                Behavior::ForgetAware if forget => refusal(p.language).to_owned(),
                Behavior::ForgetAware => p.answer.clone(),
                Behavior::ForgetAwareConfused(l) if forget => refusal(l).to_owned(),
                Behavior::ForgetAwareConfused(l) => answer_in(p, l)?,
            };
            Ok(GenerationRecord {
                pair_id: p.pair_id.clone(),
                query_language: p.language,
                question: p.question.clone(),
                reference: p.answer.clone(),
                output,
                model_id: model_id.clone(),
                split: p.split,
                extra: Default::default(),
            })
        })
        .collect()
}
