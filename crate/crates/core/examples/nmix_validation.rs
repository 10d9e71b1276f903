//! Prints the cross-language N-Mix matrix over generated ground-truth answers.
//!
//! cargo run -p unlearn-eval-core --example nmix_validation -- [en,de,zh,ru,ko]

use std::collections::HashMap;

use unlearn_eval_core::datagen::{generate_dataset, GenSpec, TranslationTables};
use unlearn_eval_core::langid::DetectorConfig;
use unlearn_eval_core::nmix::{NMixScorer, DEFAULT_LEVELS};
use unlearn_eval_core::LanguageTag;

fn main() {
    let langs = std::env::args()
        .nth(1)
        .map(|s| LanguageTag::parse_list(&s).expect("language list"))
        .unwrap_or_else(|| LanguageTag::SET_ONE.to_vec());
    let spec = GenSpec { languages: langs.clone(), ..GenSpec::default() };
    let ds = generate_dataset(&spec, &TranslationTables::bundled()).expect("dataset");
    let detector = DetectorConfig::new(langs.iter().copied()).expect("detector");
    let scorer = NMixScorer::new(&detector, &DEFAULT_LEVELS).expect("levels");
    let mut worst: HashMap<LanguageTag, (f64, String)> = HashMap::new();

    print!("{:>6}", "");
    for q in &langs {
        print!("{q:>8}");
    }
    println!();
    for &a in &langs {
        print!("{a:>6}");
        for &q in &langs {
            let scores: Vec<f64> = ds
                .pairs
                .iter()
                .filter(|p| p.language == a)
                .filter_map(|p| {
                    let v = scorer.score::<f64>(&p.answer, q).value();
                    if a == q {
                        if let Some(v) = v {
                            let w = worst.entry(a).or_insert((0.0, String::new()));
                            if v > w.0 {
                                *w = (v, p.answer.clone());
                            }
                        }
                    }
                    v
                })
                .collect();
            print!("{:>8.2}", scores.iter().sum::<f64>() / scores.len() as f64);
        }
        println!();
    }
    for (lang, (v, s)) in worst {
        if v > 0.0 {
            println!("worst {lang}: {v:.2} {s}");
        }
    }
}
