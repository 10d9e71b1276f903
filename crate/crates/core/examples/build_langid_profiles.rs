//! Regenerates `data/langid/{en,de,es}.json` from the bundled sources.
//!
//! cargo run -p unlearn-eval-core --example build_langid_profiles

use std::path::Path;

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/langid");
    for (lang, profile) in unlearn_eval_core::langid::build_bundled_profiles() {
        let path = dir.join(format!("{lang}.json"));
        std::fs::write(&path, profile.to_json())?;
        println!("{} trigrams -> {}", profile.trigrams.len(), path.display());
    }
    Ok(())
}
