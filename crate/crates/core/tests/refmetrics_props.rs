use proptest::prelude::*;
use unlearn_eval_core::datamodel::{GenerationRecord, LogProbRecord, SplitLabel};
use unlearn_eval_core::refmetrics::{
    exact_match, lcs_len, loss_audit, rouge_l, rouge_l_tokens, rouge_tokens, score_corpus, LossVariant, RougeOptions,
    RougeScore, ScoreOptions,
};
use unlearn_eval_core::LanguageTag;

/// Longest common subsequence by enumerating every subsequence of `a` (≤ 2^10 masks)
/// and testing each against `b` greedily.
fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<u8> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| a[i]).collect();
        let mut it = b.iter();
        if sub.len() > best && sub.iter().all(|x| it.any(|y| y == x)) {
            best = sub.len();
        }
    }
    best
}

fn brute_f1(a: &[u8], b: &[u8]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let l = brute_lcs(a, b) as f64;
    let p = if a.is_empty() { 0.0 } else { l / a.len() as f64 };
    let r = if b.is_empty() { 0.0 } else { l / b.len() as f64 };
    if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 }
}

fn seq() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..5, 0..=10)
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "Cat", "cat", "猫", "бег", "x1", "42"]), 0..8)
        .prop_map(|w| w.join(" "))
}

#[test]
fn oracle_agrees_on_hand_example() {
    let a = b"abcd";
    let b = b"acde";
    assert_eq!(brute_lcs(a, b), 3);
    assert_eq!(lcs_len(a, b), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dp_matches_enumeration(a in seq(), b in seq()) {
        prop_assert_eq!(lcs_len(&a, &b), brute_lcs(&a, &b));
        let r: RougeScore<f64> = rouge_l_tokens(&a, &b);
        prop_assert_eq!(r.f1, brute_f1(&a, &b));
    }
}

proptest! {
    #[test]
    fn lcs_is_symmetric(a in words(), b in words()) {
        let ab: RougeScore<f64> = rouge_l(&a, &b, LanguageTag::En);
        let ba: RougeScore<f64> = rouge_l(&b, &a, LanguageTag::En);
        prop_assert_eq!(ab.lcs_len, ba.lcs_len);
        prop_assert_eq!(ab.f1, ba.f1);
        prop_assert_eq!(ab.precision, ba.recall);
        let shortest = rouge_tokens(&a, &RougeOptions::default()).len().min(rouge_tokens(&b, &RougeOptions::default()).len());
        prop_assert!(ab.lcs_len <= shortest);
    }

    #[test]
    fn f1_one_iff_identical_tokens(a in words(), b in words()) {
        let opts = RougeOptions::default();
        let r: RougeScore<f64> = rouge_l(&a, &b, LanguageTag::En);
        prop_assert_eq!(r.f1 == 1.0, rouge_tokens(&a, &opts) == rouge_tokens(&b, &opts));
        if exact_match(&a, &b) == 1 {
            prop_assert_eq!(r.f1, 1.0);
        }
        let same: RougeScore<f64> = rouge_l(&a, &a, LanguageTag::En);
        prop_assert_eq!(same.f1, 1.0);
    }

    #[test]
    fn f1_within_unit_interval(a in words(), b in words()) {
        let r: RougeScore<f32> = rouge_l(&a, &b, LanguageTag::En);
        prop_assert!((0.0..=1.0).contains(&r.f1));
    }

    #[test]
    fn corpus_means_ignore_order(outputs in prop::collection::vec(words(), 1..12), rot in 0usize..12) {
        let records: Vec<GenerationRecord> = outputs.iter().enumerate().map(|(i, o)| GenerationRecord {
            pair_id: i.to_string(),
            query_language: if i % 2 == 0 { LanguageTag::En } else { LanguageTag::De },
            question: String::new(),
            reference: "a b Cat 42".into(),
            output: o.clone(),
            model_id: "m".into(),
            split: if i % 3 == 0 { SplitLabel::Forget } else { SplitLabel::Retain },
            extra: Default::default(),
        }).collect();
        let mut shuffled = records.clone();
        shuffled.rotate_left(rot % records.len());
        shuffled.reverse();
        let a = score_corpus::<f64>(&records, &ScoreOptions::default());
        let b = score_corpus::<f64>(&shuffled, &ScoreOptions::default());
        prop_assert_eq!(a.len(), b.len());
        for (k, s) in &a {
            prop_assert!((s.em - b[k].em).abs() < 1e-12);
            prop_assert!((s.km - b[k].km).abs() < 1e-12);
        }
    }

    #[test]
    fn gd_plus_retain_is_ga(
        forget in prop::collection::vec(-50.0f64..0.0, 1..20),
        retain in prop::collection::vec(-50.0f64..0.0, 1..20),
        alpha in 0.01f64..10.0,
    ) {
        let rec = |split, ll| LogProbRecord { pair_id: "p".into(), split, log_likelihood: ll, extra: Default::default() };
        let corpus: Vec<_> = forget.iter().map(|&v| rec(SplitLabel::Forget, v))
            .chain(retain.iter().map(|&v| rec(SplitLabel::Retain, v))).collect();
        let ga = loss_audit(&corpus, alpha, LossVariant::Ga).unwrap();
        let gd = loss_audit(&corpus, alpha, LossVariant::Gd).unwrap();
        prop_assert!((gd.total + gd.retain_term - ga.total).abs() <= 1e-12);
        prop_assert_eq!(ga.forget_term, gd.forget_term);
    }
}
