//! Regenerates `data/langid/snippets.tsv`, the labeled Latin fragment corpus.
//!
//! Fragments are 3- to 6-token windows cut from questions and answers of a dataset drawn
//! with a seed different from the default one. Windows made only of name tokens and
//! digits carry no language signal and are skipped.
//!
//! cargo run -p unlearn-eval-core --example build_snippet_corpus

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unlearn_eval_core::datagen::{generate_dataset, GenSpec, TranslationTables};
use unlearn_eval_core::segmenter::{ngrams, tokenize};
use unlearn_eval_core::LanguageTag;

const SEED: u64 = 20_251_018;
const PER_LENGTH: usize = 40;

fn main() -> std::io::Result<()> {
    let langs = [LanguageTag::En, LanguageTag::De, LanguageTag::Es];
    let spec = GenSpec { seed: SEED, languages: langs.to_vec(), ..GenSpec::default() };
    let ds = generate_dataset(&spec, &TranslationTables::bundled()).expect("dataset");
    let name_tokens: HashSet<&str> = ds.profiles.iter().flat_map(|p| p.name.split(' ')).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut out = String::from("# label<TAB>fragment; generated by examples/build_snippet_corpus.rs\n");
    for lang in langs {
        for n in 3..=6 {
            let mut seen = HashSet::new();
            let mut pool = Vec::new();
            for p in ds.pairs.iter().filter(|p| p.language == lang) {
                for text in [&p.question, &p.answer] {
                    let seq = tokenize(text);
                    if seq.len() < n {
                        continue;
                    }
                    for (i, frag) in ngrams(&seq, n).unwrap().into_iter().enumerate() {
                        let informative = seq.tokens()[i..i + n].iter().any(|t| {
                            !name_tokens.contains(t.text.as_str())
                                && t.text.chars().any(char::is_alphabetic)
                        });
                        if informative && seen.insert(frag.clone()) {
                            pool.push(frag);
                        }
                    }
                }
            }
            pool.shuffle(&mut rng);
            for frag in pool.into_iter().take(PER_LENGTH) {
                writeln!(out, "{lang}\t{frag}").unwrap();
            }
        }
    }
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/langid/snippets.tsv");
    std::fs::write(&path, out)?;
    println!("wrote {}", path.display());
    Ok(())
}
