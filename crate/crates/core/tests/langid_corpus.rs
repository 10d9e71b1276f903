use unlearn_eval_core::langid::{build_bundled_profiles, detect, labeled_snippets, DetectorConfig};
use unlearn_eval_core::segmenter::tokenize;
use unlearn_eval_core::LanguageTag;

#[test]
fn shipped_profiles_match_a_fresh_build() {
    let rebuilt = build_bundled_profiles();
    for lang in [LanguageTag::En, LanguageTag::De, LanguageTag::Es] {
        let path = format!("{}/data/langid/{}.json", env!("CARGO_MANIFEST_DIR"), lang);
        let shipped = std::fs::read_to_string(&path).unwrap();
        assert_eq!(shipped.trim_end(), rebuilt[&lang].to_json().trim_end(), "{lang} profile is stale");
    }
}

#[test]
fn corpus_has_enough_fragments_per_language() {
    let snippets = labeled_snippets();
    for lang in [LanguageTag::En, LanguageTag::De, LanguageTag::Es] {
        let n = snippets.iter().filter(|(l, _)| *l == lang).count();
        assert!(n >= 100, "{lang}: {n}");
    }
}

fn accuracy(pred: impl Fn(usize) -> bool) -> (usize, usize) {
    let cfg = DetectorConfig::new([LanguageTag::En, LanguageTag::De, LanguageTag::Es]).unwrap();
    let mut hit = 0;
    let mut total = 0;
    for (lang, text) in labeled_snippets() {
        if !pred(tokenize(&text).len()) {
            continue;
        }
        total += 1;
        if detect(&text, &cfg) == Some(lang) {
            hit += 1;
        }
    }
    (hit, total)
}

#[test]
fn latin_accuracy_on_three_or_more_tokens() {
    let (hit, total) = accuracy(|n| n >= 3);
    assert!(hit as f64 / total as f64 >= 0.95, "{hit}/{total}");
}

#[test]
fn latin_accuracy_on_three_token_fragments() {
    let (hit, total) = accuracy(|n| n == 3);
    assert!(hit as f64 / total as f64 >= 0.85, "{hit}/{total}");
}
