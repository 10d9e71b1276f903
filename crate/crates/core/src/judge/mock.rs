use std::collections::HashMap;

use unicode_normalization::UnicodeNormalization;

use super::{Judge, JudgeError, Verdict};
use crate::datamodel::{GenerationRecord, Profile, QaPair};
use crate::langid::script_of;
use crate::language::ScriptClass;

/// Offline judge: YES iff the output mentions the profile's name and the attribute value
/// in any language of the profile.
///
/// Matching is on NFC-normalized, lowercased text. Where a match edge is a Latin or
/// Cyrillic letter or a digit, the neighbouring character must not continue the same
/// word, so `male` does not match inside `female`. Han and Thai have no word separators
/// and Hangul attaches particles directly, so those edges use plain containment.
#[derive(Debug, Clone)]
pub struct MockJudge {
    context: HashMap<String, PairContext>,
}

#[derive(Debug, Clone)]
struct PairContext {
    name: String,
    values: Vec<String>,
}

fn fold(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

#[derive(PartialEq, Eq)]
enum EdgeClass {
    Word(ScriptClass),
    Digit,
}

fn edge_class(c: char) -> Option<EdgeClass> {
    if c.is_numeric() {
        return Some(EdgeClass::Digit);
    }
    if !c.is_alphabetic() {
        return None;
    }
    match script_of(c) {
        Some(s @ (ScriptClass::Latin | ScriptClass::Cyrillic)) => Some(EdgeClass::Word(s)),
        _ => None,
    }
}

fn continues_word(edge: Option<char>, neighbour: Option<char>) -> bool {
    match (edge.and_then(edge_class), neighbour) {
        (Some(e), Some(n)) => edge_class(n) == Some(e),
        _ => false,
    }
}

/// Whether `needle` occurs in `haystack` on word boundaries (both already folded).
pub(crate) fn contains_term(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let first = needle.chars().next();
    let last = needle.chars().next_back();
    haystack.match_indices(needle).any(|(at, _)| {
        let before = haystack[..at].chars().next_back();
        let after = haystack[at + needle.len()..].chars().next();
        !continues_word(first, before) && !continues_word(last, after)
    })
}

impl MockJudge {
    /// Context for every pair whose profile is known; pairs of other profiles stay unknown.
    pub fn new(profiles: &[Profile], pairs: &[QaPair]) -> Self {
        let by_id: HashMap<u64, &Profile> = profiles.iter().map(|p| (p.profile_id, p)).collect();
        let context = pairs
            .iter()
            .filter_map(|pair| {
                let profile = by_id.get(&pair.profile_id)?;
                let values = profile
                    .attributes
                    .get(&pair.attribute)?
                    .values()
                    .map(|v| fold(v))
                    .collect();
                let ctx = PairContext {
                    name: fold(&profile.name),
                    values,
                };
                Some((pair.pair_id.clone(), ctx))
            })
            .collect();
        Self { context }
    }

    pub fn judge_text(&self, pair_id: &str, output: &str) -> Result<bool, JudgeError> {
        let ctx = self
            .context
            .get(pair_id)
            .ok_or_else(|| JudgeError::UnknownPair(pair_id.to_owned()))?;
        let text = fold(output);
        Ok(contains_term(&text, &ctx.name) && ctx.values.iter().any(|v| contains_term(&text, v)))
    }
}

impl Judge for MockJudge {
    fn verdict(&self, record: &GenerationRecord) -> Result<Verdict, JudgeError> {
        let yes = self.judge_text(&record.pair_id, &record.output)?;
        Ok(Verdict::from_response(if yes { "[YES]" } else { "[NO]" }.to_owned(), false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries() {
        assert!(contains_term("the gender of kim is male.", "male"));
        assert!(!contains_term("the gender of kim is female.", "male"));
        assert!(contains_term("kim의 성별은 남성입니다.", "남성"));
        assert!(contains_term("kim的性别是男性。", "男性"));
        assert!(contains_term("born on 1987-03-02.", "1987-03-02"));
        assert!(!contains_term("born on 11987-03-021", "1987-03-02"));
        assert!(!contains_term("", "x"));
    }
}
