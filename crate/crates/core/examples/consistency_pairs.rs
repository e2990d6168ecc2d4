//! Polarity-flipped question pairs and the consistency penalty between the
//! model's answers to each side of a pair.
//!
//! ```bash
//! cargo run --release --example consistency_pairs
//! ```

use rgn::data::{flip_question, synth_generate, Label, SyntheticSpec, WiqaExample};
use rgn::encoder::{EncoderConfig, Vocabulary};
use rgn::model::{consistency_loss, RgnConfig, RgnModel, TrainConfig, Trainer};

fn mean_consistency(model: &RgnModel, data: &[WiqaExample]) -> rgn::Result<f64> {
    let mut total = 0.0;
    let mut pairs = 0;
    for ex in data {
        if let Some(f) = flip_question(ex) {
            total += consistency_loss(&model.predict(ex)?, &model.predict(&f)?);
            pairs += 1;
        }
    }
    Ok(total / pairs.max(1) as f64)
}

fn main() -> rgn::Result<()> {
    let q = WiqaExample::new(
        "demo",
        "suppose MORE rain falls , how will it affect a larger flood ?",
        vec!["rain fills the river.".into()],
        Some(Label::More),
        None,
        None,
    );
    let f = flip_question(&q).expect("has a polarity word");
    println!("{}  [{}]\n{}  [{}]\n", q.question, q.id, f.question, f.id);

    let data = synth_generate(&SyntheticSpec {
        num_examples: 240,
        num_entities: 3,
        max_hops: 2,
        seed: 5,
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
            m: 12,
            n: 24,
            heads: 2,
            freeze_epochs: 0,
            ..EncoderConfig::default()
        },
        k: 3,
        use_consistency: true,
        consistency_weight: 0.5,
        ..RgnConfig::default()
    };
    let mut model = RgnModel::new(&config, vocab)?;
    println!("mean consistency before training {:.4}", mean_consistency(&model, &data)?);
    let trainer = Trainer::new(TrainConfig {
        epochs: 6,
        ..TrainConfig::default()
    })?;
    trainer.train(&mut model, &data, &[], |log| {
        println!(
            "epoch {}  loss {:.4}  pair coverage {:.2}",
            log.epoch, log.train_loss, log.pair_coverage
        )
    })?;
    println!("mean consistency after training {:.4}", mean_consistency(&model, &data)?);
    Ok(())
}
