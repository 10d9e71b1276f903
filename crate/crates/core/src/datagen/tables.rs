use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::datamodel::{nfc, AttributeKey};
use crate::language::LanguageTag;

/// How an attribute's values are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Categorical,
    /// Uniform over calendar dates; identical in every language.
    DateRange,
}

/// Index-aligned values of one categorical attribute across languages.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributePool<'a> {
    pub attribute: AttributeKey,
    pub kind: PoolKind,
    pub values: Option<&'a BTreeMap<LanguageTag, Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaTemplate {
    #[serde(rename = "q")]
    pub question: String,
    #[serde(rename = "a")]
    pub answer: String,
}

impl QaTemplate {
    pub fn render_question(&self, name: &str) -> String {
        self.question.replace("{name}", name)
    }

    pub fn render_answer(&self, name: &str, value: &str) -> String {
        self.answer.replace("{name}", name).replace("{value}", value)
    }

    fn check(&self) -> Result<(), String> {
        let count = |s: &str, p: &str| s.matches(p).count();
        if count(&self.question, "{name}") != 1 {
            return Err("question template must contain {name} exactly once".into());
        }
        if count(&self.question, "{value}") != 0 {
            return Err("question template must not contain {value}".into());
        }
        if count(&self.answer, "{name}") != 1 || count(&self.answer, "{value}") != 1 {
            return Err("answer template must contain {name} and {value} exactly once each".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("translation table is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{key}: {message}")]
    Malformed { key: String, message: String },
}

fn malformed(key: impl Into<String>, message: impl Into<String>) -> TableError {
    TableError::Malformed {
        key: key.into(),
        message: message.into(),
    }
}

/// Attribute value pools and QA templates for any subset of the supported languages.
///
/// JSON layout: `{"pools":{attr:{lang:[...]}}, "templates":{attr:{lang:{"q":...,"a":...}}}}`.
/// Pools are index-aligned with the English pool; birthday has no pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationTables {
    pools: BTreeMap<AttributeKey, BTreeMap<LanguageTag, Vec<String>>>,
    templates: BTreeMap<AttributeKey, BTreeMap<LanguageTag, QaTemplate>>,
}

/// A `(section, attribute, language)` cell absent from the tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingCell {
    pub section: &'static str,
    pub attribute: AttributeKey,
    pub language: LanguageTag,
}

const BUNDLED: &str = include_str!("../../data/translations.json");

fn english_pool(attr: AttributeKey) -> &'static [&'static str] {
    match attr {
        AttributeKey::Gender => &["male", "female"],
        AttributeKey::Birthday => &[],
        AttributeKey::Employment => &[
            "software developer",
            "doctor",
            "artist",
            "professor",
            "athlete",
            "architect",
            "pilot",
            "lawyer",
            "nurse",
            "financial analyst",
            "teacher",
            "small business owner",
            "mechanic",
            "carpenter",
            "police officer",
            "accountant",
            "homemaker",
            "chef",
            "secretary",
            "retail worker",
        ],
        AttributeKey::Residence => &[
            "Brazil",
            "Canada",
            "Egypt",
            "Germany",
            "India",
            "Japan",
            "Mexico",
            "Russia",
            "South Korea",
            "United States",
        ],
        AttributeKey::Religion => &["non-religious", "Christian", "Buddhist"],
        AttributeKey::Education => &["middle school", "high school", "university"],
        AttributeKey::Hobby => &[
            "skydiving",
            "soccer",
            "skiing",
            "basketball",
            "reading",
            "cooking",
            "dancing",
            "gardening",
            "archery",
            "backpacking",
            "hiking",
            "kayaking",
            "drawing",
            "writing",
            "fishing",
            "photography",
        ],
    }
}

fn english_template(attr: AttributeKey) -> (&'static str, &'static str) {
    match attr {
        AttributeKey::Gender => ("What is the gender of {name}?", "The gender of {name} is {value}."),
        AttributeKey::Birthday => ("When was {name} born?", "{name} was born on {value}."),
        AttributeKey::Employment => (
            "What is the occupation of {name}?",
            "The occupation of {name} is {value}.",
        ),
        AttributeKey::Residence => ("Where does {name} live?", "{name} lives in {value}."),
        AttributeKey::Religion => (
            "What is the religion of {name}?",
            "The religion of {name} is {value}.",
        ),
        AttributeKey::Education => (
            "What is the highest level of education of {name}?",
            "The highest level of education of {name} is {value}.",
        ),
        AttributeKey::Hobby => ("What is the hobby of {name}?", "The hobby of {name} is {value}."),
    }
}

pub fn pool_kind(attr: AttributeKey) -> PoolKind {
    if attr == AttributeKey::Birthday {
        PoolKind::DateRange
    } else {
        PoolKind::Categorical
    }
}

impl TranslationTables {
    /// English pools and templates only.
    pub fn english_defaults() -> Self {
        let mut pools = BTreeMap::new();
        let mut templates = BTreeMap::new();
        for attr in AttributeKey::ALL {
            if pool_kind(attr) == PoolKind::Categorical {
                let values = english_pool(attr).iter().map(|s| s.to_string()).collect();
                pools.insert(attr, BTreeMap::from([(LanguageTag::En, values)]));
            }
            let (q, a) = english_template(attr);
            templates.insert(
                attr,
                BTreeMap::from([(
                    LanguageTag::En,
                    QaTemplate {
                        question: q.into(),
                        answer: a.into(),
                    },
                )]),
            );
        }
        Self { pools, templates }
    }

    /// The repo-shipped tables covering all eight languages.
    pub fn bundled() -> Self {
        Self::english_defaults()
            .merged_from_json(BUNDLED)
            .expect("bundled translation tables are valid")
    }

    /// English defaults overlaid with the tables in `path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::english_defaults().merged_from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        Self::english_defaults().merged_from_json(text)
    }

    fn merged_from_json(mut self, text: &str) -> Result<Self, TableError> {
        let root: Value = serde_json::from_str(text)?;
        let root = root
            .as_object()
            .ok_or_else(|| malformed("$", "expected an object"))?;
        for key in root.keys() {
            if key != "pools" && key != "templates" {
                return Err(malformed(key.as_str(), "unknown section"));
            }
        }
        if let Some(pools) = root.get("pools") {
            for (attr_key, per_lang) in object(pools, "pools")? {
                let attr = attribute(attr_key, &format!("pools.{attr_key}"))?;
                if pool_kind(attr) == PoolKind::DateRange {
                    return Err(malformed(
                        format!("pools.{attr_key}"),
                        "birthday is a date range and has no pool",
                    ));
                }
                let english_len = english_pool(attr).len();
                for (lang_key, values) in object(per_lang, &format!("pools.{attr_key}"))? {
                    let at = format!("pools.{attr_key}.{lang_key}");
                    let lang = language(lang_key, &at)?;
                    let arr = values
                        .as_array()
                        .ok_or_else(|| malformed(&at, "expected an array"))?;
                    let mut out = Vec::with_capacity(arr.len());
                    for idx in 0..english_len.max(arr.len()) {
                        let cell = format!("{at}[{idx}]");
                        match arr.get(idx) {
                            None => {
                                return Err(malformed(
                                    cell,
                                    format!(
                                        "missing (pool has {} values, English has {english_len})",
                                        arr.len()
                                    ),
                                ))
                            }
                            Some(_) if idx >= english_len => {
                                return Err(malformed(
                                    cell,
                                    format!("extra value: English pool has {english_len} values"),
                                ))
                            }
                            Some(Value::String(s)) if !s.trim().is_empty() => {
                                let mut s = s.clone();
                                nfc(&mut s);
                                out.push(s);
                            }
                            Some(Value::String(_)) | Some(Value::Null) => {
                                return Err(malformed(cell, "missing value"))
                            }
                            Some(_) => return Err(malformed(cell, "expected a string")),
                        }
                    }
                    self.pools.entry(attr).or_default().insert(lang, out);
                }
            }
        }
        if let Some(templates) = root.get("templates") {
            for (attr_key, per_lang) in object(templates, "templates")? {
                let attr = attribute(attr_key, &format!("templates.{attr_key}"))?;
                for (lang_key, tpl) in object(per_lang, &format!("templates.{attr_key}"))? {
                    let at = format!("templates.{attr_key}.{lang_key}");
                    let lang = language(lang_key, &at)?;
                    let mut tpl: QaTemplate = serde_json::from_value(tpl.clone())
                        .map_err(|e| malformed(&at, e.to_string()))?;
                    nfc(&mut tpl.question);
                    nfc(&mut tpl.answer);
                    tpl.check().map_err(|m| malformed(&at, m))?;
                    self.templates.entry(attr).or_default().insert(lang, tpl);
                }
            }
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut pools = Map::new();
        for (attr, per_lang) in &self.pools {
            let m: Map<String, Value> = per_lang
                .iter()
                .map(|(l, v)| (l.code().to_string(), json!(v)))
                .collect();
            pools.insert(attr.name().to_string(), Value::Object(m));
        }
        let mut templates = Map::new();
        for (attr, per_lang) in &self.templates {
            let m: Map<String, Value> = per_lang
                .iter()
                .map(|(l, t)| (l.code().to_string(), json!({"q": t.question, "a": t.answer})))
                .collect();
            templates.insert(attr.name().to_string(), Value::Object(m));
        }
        let mut s = serde_json::to_string_pretty(&json!({"pools": pools, "templates": templates}))
            .expect("tables serialize");
        s.push('\n');
        s
    }

    /// Writes the English defaults as a worksheet to translate.
    pub fn export_english_defaults(path: impl AsRef<Path>) -> Result<(), TableError> {
        let path = path.as_ref();
        std::fs::write(path, Self::english_defaults().to_json()).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn pool(&self, attribute: AttributeKey) -> AttributePool<'_> {
        AttributePool {
            attribute,
            kind: pool_kind(attribute),
            values: self.pools.get(&attribute),
        }
    }

    pub fn pool_values(&self, attribute: AttributeKey, language: LanguageTag) -> Option<&[String]> {
        self.pools.get(&attribute)?.get(&language).map(Vec::as_slice)
    }

    pub fn pool_len(&self, attribute: AttributeKey) -> usize {
        english_pool(attribute).len()
    }

    pub fn template(&self, attribute: AttributeKey, language: LanguageTag) -> Option<&QaTemplate> {
        self.templates.get(&attribute)?.get(&language)
    }

    /// Languages with every pool and template cell present.
    pub fn complete_languages(&self) -> Vec<LanguageTag> {
        LanguageTag::ALL
            .into_iter()
            .filter(|l| self.missing_cells(&[*l]).is_empty())
            .collect()
    }

    pub fn missing_cells(&self, languages: &[LanguageTag]) -> Vec<MissingCell> {
        let mut out = Vec::new();
        for &language in languages {
            for attribute in AttributeKey::ALL {
                if pool_kind(attribute) == PoolKind::Categorical
                    && self.pool_values(attribute, language).is_none()
                {
                    out.push(MissingCell {
                        section: "pools",
                        attribute,
                        language,
                    });
                }
                if self.template(attribute, language).is_none() {
                    out.push(MissingCell {
                        section: "templates",
                        attribute,
                        language,
                    });
                }
            }
        }
        out
    }

    /// Rendered questions and answers in `language`, every pool value once, names rotating.
    pub fn training_corpus(&self, language: LanguageTag, names: &[String]) -> Vec<String> {
        const DATES: [&str; 4] = ["1953-07-14", "1968-11-02", "1987-03-25", "2004-09-30"];
        let mut out = Vec::new();
        let mut k = 0usize;
        let mut next_name = || {
            let n = names.get(k % names.len().max(1)).map(String::as_str).unwrap_or("");
            k += 1;
            n
        };
        for attr in AttributeKey::ALL {
            let Some(tpl) = self.template(attr, language) else { continue };
            let values: Vec<&str> = match pool_kind(attr) {
                PoolKind::DateRange => DATES.to_vec(),
                PoolKind::Categorical => self
                    .pool_values(attr, language)
                    .map(|v| v.iter().map(String::as_str).collect())
                    .unwrap_or_default(),
            };
            for value in values {
                let name = next_name();
                out.push(tpl.render_question(name));
                out.push(tpl.render_answer(name, value));
            }
        }
        out
    }
}

fn object<'a>(v: &'a Value, key: &str) -> Result<&'a Map<String, Value>, TableError> {
    v.as_object().ok_or_else(|| malformed(key, "expected an object"))
}

fn attribute(key: &str, at: &str) -> Result<AttributeKey, TableError> {
    key.parse().map_err(|m: String| malformed(at, m))
}

fn language(key: &str, at: &str) -> Result<LanguageTag, TableError> {
    key.parse().map_err(|e: crate::language::UnknownLanguage| malformed(at, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_pool_sizes() {
        let t = TranslationTables::english_defaults();
        let sizes: Vec<_> = [
            AttributeKey::Gender,
            AttributeKey::Employment,
            AttributeKey::Residence,
            AttributeKey::Religion,
            AttributeKey::Education,
            AttributeKey::Hobby,
        ]
        .iter()
        .map(|a| t.pool_values(*a, LanguageTag::En).unwrap().len())
        .collect();
        assert_eq!(sizes, vec![2, 20, 10, 3, 3, 16]);
        assert_eq!(t.pool(AttributeKey::Birthday).kind, PoolKind::DateRange);
    }

    #[test]
    fn bundled_covers_all_languages() {
        let t = TranslationTables::bundled();
        assert_eq!(t.complete_languages(), LanguageTag::ALL.to_vec());
        assert!(t.missing_cells(&LanguageTag::ALL).is_empty());
        // English in the shipped file matches the built-in defaults verbatim.
        for attr in AttributeKey::ALL {
            assert_eq!(
                t.template(attr, LanguageTag::En),
                TranslationTables::english_defaults().template(attr, LanguageTag::En)
            );
        }
    }

    #[test]
    fn missing_pool_index_names_the_cell() {
        let mut hobbies: Vec<Value> = english_pool(AttributeKey::Hobby).iter().map(|s| json!(s)).collect();
        hobbies[7] = Value::Null;
        let doc = json!({"pools": {"hobby": {"de": hobbies}}});
        let err = TranslationTables::from_json(&doc.to_string()).unwrap_err();
        assert!(err.to_string().starts_with("pools.hobby.de[7]"), "{err}");

        let short: Vec<&str> = english_pool(AttributeKey::Hobby)[..7].to_vec();
        let doc = json!({"pools": {"hobby": {"de": short}}});
        let err = TranslationTables::from_json(&doc.to_string()).unwrap_err();
        assert!(err.to_string().starts_with("pools.hobby.de[7]"), "{err}");
    }

    #[test]
    fn length_mismatch_and_bad_templates_rejected() {
        let doc = json!({"pools": {"gender": {"de": ["a", "b", "c"]}}});
        assert!(TranslationTables::from_json(&doc.to_string()).is_err());
        let doc = json!({"templates": {"hobby": {"de": {"q": "Hobby?", "a": "{name}: {value}"}}}});
        let err = TranslationTables::from_json(&doc.to_string()).unwrap_err();
        assert!(err.to_string().starts_with("templates.hobby.de"), "{err}");
        let doc = json!({"pools": {"birthday": {"de": []}}});
        assert!(TranslationTables::from_json(&doc.to_string()).is_err());
        assert!(TranslationTables::from_json("[1]").is_err());
    }

    #[test]
    fn partial_tables_report_missing_cells() {
        let doc = json!({"pools": {"gender": {"de": ["männlich", "weiblich"]}}});
        let t = TranslationTables::from_json(&doc.to_string()).unwrap();
        let missing = t.missing_cells(&[LanguageTag::De]);
        assert_eq!(missing.len(), 5 + 7);
        assert!(!missing.iter().any(|m| m.section == "pools" && m.attribute == AttributeKey::Gender));
    }

    #[test]
    fn export_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("worksheet.json");
        TranslationTables::export_english_defaults(&path).unwrap();
        assert_eq!(TranslationTables::load(&path).unwrap(), TranslationTables::english_defaults());
        let full = TranslationTables::bundled();
        assert_eq!(TranslationTables::from_json(&full.to_json()).unwrap(), full);
    }
}
