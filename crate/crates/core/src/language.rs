//! The closed set of supported languages and the scripts they are written in.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Writing systems the detector and segmenter distinguish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScriptClass {
    Han,
    Hangul,
    Cyrillic,
    Devanagari,
    Thai,
    Latin,
}

impl ScriptClass {
    /// Fixed priority used to break plurality ties.
    pub const PRIORITY: [ScriptClass; 6] = [
        ScriptClass::Han,
        ScriptClass::Hangul,
        ScriptClass::Cyrillic,
        ScriptClass::Devanagari,
        ScriptClass::Thai,
        ScriptClass::Latin,
    ];

    /// Scripts written without spaces between words; segmented per codepoint.
    pub fn is_scriptio_continua(self) -> bool {
        matches!(self, ScriptClass::Han | ScriptClass::Thai)
    }

    /// The single supported language written in this script, if there is exactly one.
    pub fn unique_language(self) -> Option<LanguageTag> {
        match self {
            ScriptClass::Han => Some(LanguageTag::Zh),
            ScriptClass::Hangul => Some(LanguageTag::Ko),
            ScriptClass::Cyrillic => Some(LanguageTag::Ru),
            ScriptClass::Devanagari => Some(LanguageTag::Hi),
            ScriptClass::Thai => Some(LanguageTag::Th),
            ScriptClass::Latin => None,
        }
    }
}

/// One of the eight supported languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageTag {
    En,
    De,
    Es,
    Zh,
    Ru,
    Ko,
    Hi,
    Th,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported language tag `{0}` (expected one of en, de, es, zh, ru, ko, hi, th)")]
pub struct UnknownLanguage(pub String);

impl LanguageTag {
    pub const ALL: [LanguageTag; 8] = [
        LanguageTag::En,
        LanguageTag::De,
        LanguageTag::Es,
        LanguageTag::Zh,
        LanguageTag::Ru,
        LanguageTag::Ko,
        LanguageTag::Hi,
        LanguageTag::Th,
    ];

    /// Default experiment languages: English, German, Chinese, Russian, Korean.
    pub const SET_ONE: [LanguageTag; 5] = [
        LanguageTag::En,
        LanguageTag::De,
        LanguageTag::Zh,
        LanguageTag::Ru,
        LanguageTag::Ko,
    ];

    /// Replication set: English, German, Hindi, Spanish, Thai.
    pub const SET_TWO: [LanguageTag; 5] = [
        LanguageTag::En,
        LanguageTag::De,
        LanguageTag::Hi,
        LanguageTag::Es,
        LanguageTag::Th,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LanguageTag::En => "en",
            LanguageTag::De => "de",
            LanguageTag::Es => "es",
            LanguageTag::Zh => "zh",
            LanguageTag::Ru => "ru",
            LanguageTag::Ko => "ko",
            LanguageTag::Hi => "hi",
            LanguageTag::Th => "th",
        }
    }

    pub fn script(self) -> ScriptClass {
        match self {
            LanguageTag::En | LanguageTag::De | LanguageTag::Es => ScriptClass::Latin,
            LanguageTag::Zh => ScriptClass::Han,
            LanguageTag::Ko => ScriptClass::Hangul,
            LanguageTag::Ru => ScriptClass::Cyrillic,
            LanguageTag::Hi => ScriptClass::Devanagari,
            LanguageTag::Th => ScriptClass::Thai,
        }
    }

    /// Parses a comma-separated list such as `en,de,zh`. Duplicates are rejected.
    pub fn parse_list(list: &str) -> Result<Vec<LanguageTag>, UnknownLanguage> {
        let mut out = Vec::new();
        for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let tag: LanguageTag = part.parse()?;
            if out.contains(&tag) {
                return Err(UnknownLanguage(format!("{part} (duplicate)")));
            }
            out.push(tag);
        }
        Ok(out)
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.code())
    }
}

impl FromStr for LanguageTag {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LanguageTag::ALL
            .into_iter()
            .find(|tag| tag.code() == s)
            .ok_or_else(|| UnknownLanguage(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_mapping_is_fixed() {
        use LanguageTag::*;
        for tag in [En, De, Es] {
            assert_eq!(tag.script(), ScriptClass::Latin);
        }
        assert_eq!(Zh.script(), ScriptClass::Han);
        assert_eq!(Ko.script(), ScriptClass::Hangul);
        assert_eq!(Ru.script(), ScriptClass::Cyrillic);
        assert_eq!(Hi.script(), ScriptClass::Devanagari);
        assert_eq!(Th.script(), ScriptClass::Thai);
        for tag in LanguageTag::ALL {
            if tag.script() != ScriptClass::Latin {
                assert_eq!(tag.script().unique_language(), Some(tag));
            }
        }
    }

    #[test]
    fn only_closed_set_parses() {
        assert_eq!("ko".parse::<LanguageTag>().unwrap(), LanguageTag::Ko);
        assert!("fr".parse::<LanguageTag>().is_err());
        assert!("EN".parse::<LanguageTag>().is_err());
        assert_eq!(
            LanguageTag::parse_list("en, de,zh").unwrap(),
            vec![LanguageTag::En, LanguageTag::De, LanguageTag::Zh]
        );
        assert!(LanguageTag::parse_list("en,en").is_err());
    }

    #[test]
    fn serde_uses_lowercase_codes() {
        assert_eq!(serde_json::to_string(&LanguageTag::Th).unwrap(), "\"th\"");
        let tag: LanguageTag = serde_json::from_str("\"hi\"").unwrap();
        assert_eq!(tag, LanguageTag::Hi);
    }
}
