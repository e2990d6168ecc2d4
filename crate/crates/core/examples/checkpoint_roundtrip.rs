//! Saves an untrained model, loads it back and confirms the predictions are
//! bitwise identical. Loading against a different config fails.
//!
//! ```bash
//! cargo run --example checkpoint_roundtrip
//! ```

use rgn::data::{synth_generate, SyntheticSpec};
use rgn::encoder::{EncoderConfig, Vocabulary};
use rgn::model::{RgnConfig, RgnModel};

fn main() -> rgn::Result<()> {
    let data = synth_generate(&SyntheticSpec {
        num_examples: 30,
        ..SyntheticSpec::default()
    })?;
    let vocab = Vocabulary::build(
        data.iter()
            .flat_map(|e| [&e.question_tokens, &e.paragraph_tokens]),
        1,
    )?;
    let config = RgnConfig {
        encoder: EncoderConfig {
            d: 16,
            m: 16,
            n: 32,
            ..EncoderConfig::default()
        },
        k: 3,
        ..RgnConfig::default()
    };
    let model = RgnModel::new(&config, vocab)?;
    let dir = tempfile::tempdir().map_err(|e| rgn::Error::io("tempdir", e))?;
    model.save(dir.path())?;
    println!("saved {} parameters, fingerprint {}", model.num_parameters(), model.fingerprint());

    let loaded = RgnModel::load(dir.path(), Some(model.config()))?;
    let same = data.iter().all(|ex| {
        let (a, b) = (model.predict(ex).unwrap(), loaded.predict(ex).unwrap());
        a.logits.map(f64::to_bits) == b.logits.map(f64::to_bits)
    });
    println!("predictions identical after reload: {same}");

    let other = RgnConfig {
        k: 4,
        ..model.config().clone()
    };
    match RgnModel::load(dir.path(), Some(&other)) {
        Ok(_) => println!("unexpected: mismatched config loaded"),
        Err(e) => println!("mismatched config rejected: {e}"),
    }
    Ok(())
}
