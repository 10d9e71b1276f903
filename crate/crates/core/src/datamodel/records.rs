use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use unicode_normalization::UnicodeNormalization;

use crate::language::LanguageTag;

pub type Extra = Map<String, Value>;

/// The seven profile attributes, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKey {
    Gender,
    Birthday,
    Employment,
    Residence,
    Religion,
    Education,
    Hobby,
}

impl AttributeKey {
    pub const ALL: [AttributeKey; 7] = [
        AttributeKey::Gender,
        AttributeKey::Birthday,
        AttributeKey::Employment,
        AttributeKey::Residence,
        AttributeKey::Religion,
        AttributeKey::Education,
        AttributeKey::Hobby,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttributeKey::Gender => "gender",
            AttributeKey::Birthday => "birthday",
            AttributeKey::Employment => "employment",
            AttributeKey::Residence => "residence",
            AttributeKey::Religion => "religion",
            AttributeKey::Education => "education",
            AttributeKey::Hobby => "hobby",
        }
    }
}

impl fmt::Display for AttributeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for AttributeKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttributeKey::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown attribute `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Forget,
    Retain,
}

impl SplitLabel {
    pub fn name(self) -> &'static str {
        match self {
            SplitLabel::Forget => "forget",
            SplitLabel::Retain => "retain",
        }
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SplitLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forget" => Ok(SplitLabel::Forget),
            "retain" => Ok(SplitLabel::Retain),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

pub const BIRTH_YEAR_RANGE: std::ops::RangeInclusive<i32> = 1950..=2010;

/// Parses a strict `YYYY-MM-DD` date.
pub fn parse_birthday(value: &str) -> Result<NaiveDate, String> {
    let bytes = value.as_bytes();
    let shape_ok = bytes.len() == 10
        && bytes[4] == b'-'
        && bytes[7] == b'-'
        && bytes
            .iter()
            .enumerate()
            .all(|(i, b)| i == 4 || i == 7 || b.is_ascii_digit());
    if !shape_ok {
        return Err(format!("birthday `{value}` is not formatted YYYY-MM-DD"));
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|e| format!("birthday `{value}` is not a valid date: {e}"))
}

pub(crate) fn nfc(s: &mut String) {
    if !unicode_normalization::is_nfc(s) {
        *s = s.nfc().collect();
    }
}

/// A synthetic person. The name is the same English string in every language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub profile_id: u64,
    pub name: String,
    pub attributes: BTreeMap<AttributeKey, BTreeMap<LanguageTag, String>>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl Profile {
    pub fn value(&self, attribute: AttributeKey, language: LanguageTag) -> Option<&str> {
        self.attributes.get(&attribute)?.get(&language).map(String::as_str)
    }

    pub fn languages(&self) -> Vec<LanguageTag> {
        self.attributes
            .get(&AttributeKey::Gender)
            .map(|m| m.keys().copied().collect())
            .unwrap_or_default()
    }
}

/// One question/answer record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub pair_id: String,
    pub profile_id: u64,
    pub attribute: AttributeKey,
    pub language: LanguageTag,
    pub question: String,
    pub answer: String,
    pub split: SplitLabel,
    #[serde(flatten)]
    pub extra: Extra,
}

impl QaPair {
    pub fn make_id(profile_id: u64, attribute: AttributeKey, language: LanguageTag) -> String {
        format!("{profile_id}-{attribute}-{language}")
    }
}

/// A model output joined to its query and ground-truth answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub pair_id: String,
    pub query_language: LanguageTag,
    pub question: String,
    pub reference: String,
    pub output: String,
    pub model_id: String,
    pub split: SplitLabel,
    #[serde(flatten)]
    pub extra: Extra,
}

/// Log-likelihood of an answer given its question, as reported by an external model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbRecord {
    pub pair_id: String,
    pub split: SplitLabel,
    pub log_likelihood: f64,
    #[serde(flatten)]
    pub extra: Extra,
}

/// On-disk record families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Profiles,
    Qa,
    Generations,
    Logprobs,
}

impl Schema {
    pub fn required_fields(self) -> &'static [&'static str] {
        match self {
            Schema::Profiles => &["profile_id", "name", "attributes"],
            Schema::Qa => &[
                "pair_id",
                "profile_id",
                "attribute",
                "language",
                "question",
                "answer",
                "split",
            ],
            Schema::Generations => &[
                "pair_id",
                "query_language",
                "question",
                "reference",
                "output",
                "model_id",
                "split",
            ],
            Schema::Logprobs => &["pair_id", "split", "log_likelihood"],
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schema::Profiles => "profiles",
            Schema::Qa => "qa",
            Schema::Generations => "generations",
            Schema::Logprobs => "logprobs",
        })
    }
}

/// A field-level invariant violation found after parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl FieldIssue {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Implemented by every JSON-lines record type.
pub trait Record: Serialize + serde::de::DeserializeOwned {
    const SCHEMA: Schema;

    /// Applies NFC to every text field.
    fn normalize(&mut self);

    fn check(&self) -> Result<(), FieldIssue> {
        Ok(())
    }
}

impl Record for Profile {
    const SCHEMA: Schema = Schema::Profiles;

    fn normalize(&mut self) {
        nfc(&mut self.name);
        for per_lang in self.attributes.values_mut() {
            per_lang.values_mut().for_each(nfc);
        }
    }

    fn check(&self) -> Result<(), FieldIssue> {
        if self.name.trim().is_empty() {
            return Err(FieldIssue::new("name", "name is empty"));
        }
        for key in AttributeKey::ALL {
            if !self.attributes.contains_key(&key) {
                return Err(FieldIssue::new(
                    format!("attributes.{key}"),
                    "attribute is missing",
                ));
            }
        }
        let birthdays = &self.attributes[&AttributeKey::Birthday];
        let mut first: Option<&str> = None;
        for (lang, value) in birthdays {
            let field = format!("attributes.birthday.{lang}");
            let date = parse_birthday(value).map_err(|m| FieldIssue::new(&field, m))?;
            if !BIRTH_YEAR_RANGE.contains(&date.year()) {
                return Err(FieldIssue::new(
                    field,
                    format!("birth year {} outside 1950..=2010", date.year()),
                ));
            }
            match first {
                None => first = Some(value),
                Some(f) if f != value => {
                    return Err(FieldIssue::new(field, "birthday differs across languages"))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

impl Record for QaPair {
    const SCHEMA: Schema = Schema::Qa;

    fn normalize(&mut self) {
        nfc(&mut self.pair_id);
        nfc(&mut self.question);
        nfc(&mut self.answer);
    }
}

impl Record for GenerationRecord {
    const SCHEMA: Schema = Schema::Generations;

    fn normalize(&mut self) {
        nfc(&mut self.pair_id);
        nfc(&mut self.question);
        nfc(&mut self.reference);
        nfc(&mut self.output);
        nfc(&mut self.model_id);
    }
}

impl Record for LogProbRecord {
    const SCHEMA: Schema = Schema::Logprobs;

    fn normalize(&mut self) {
        nfc(&mut self.pair_id);
    }

    fn check(&self) -> Result<(), FieldIssue> {
        if !self.log_likelihood.is_finite() {
            return Err(FieldIssue::new("log_likelihood", "value is not finite"));
        }
        Ok(())
    }
}
