//! Trains a small RGN on the synthetic influence-graph task and compares it
//! with the majority baseline.
//!
//! ```bash
//! cargo run --release --example train_synthetic -- [epochs] [train] [dev]
//! ```

use std::time::Instant;

use rgn::data::{default_entity_names, synth_generate, MajorityBaseline, SyntheticSpec};
use rgn::encoder::{EncoderConfig, Vocabulary};
use rgn::model::{RgnConfig, RgnModel, TrainConfig, Trainer};
use rgn::numerics::AdamConfig;

fn arg(i: usize, default: usize) -> usize {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> rgn::Result<()> {
    let epochs = arg(1, 30);
    let n_train = arg(2, 2000);
    let n_dev = arg(3, 500);

    let data = synth_generate(&SyntheticSpec {
        num_examples: n_train + n_dev,
        num_entities: 3,
        max_hops: 2,
        seed: 11,
        entity_names: default_entity_names()[..10].to_vec(),
        ..SyntheticSpec::default()
    })?;
    let (train, dev) = data.split_at(n_train);

    let vocab = Vocabulary::build(
        train
            .iter()
            .flat_map(|e| [&e.question_tokens, &e.paragraph_tokens]),
        1,
    )?;
    let config = RgnConfig {
        encoder: EncoderConfig {
            d: 32,
            ffn_hidden: Some(64),
            m: 12,
            n: 24,
            mixing_layers: 2,
            heads: 4,
            freeze_epochs: 0,
            ..EncoderConfig::default()
        },
        k: 4,
        entity_hidden: vec![32, 32],
        relation_hidden: vec![32, 32],
        classifier_hidden: 64,
        ..RgnConfig::default()
    };
    let mut model = RgnModel::new(&config, vocab)?;
    println!("parameters: {}", model.num_parameters());

    let trainer = Trainer::new(TrainConfig {
        epochs,
        batch_size: 4,
        patience: epochs,
        optimizer: AdamConfig {
            learning_rate: 1e-3,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    })?;
    let start = Instant::now();
    let outcome = trainer.train(&mut model, train, dev, |log| {
        println!(
            "epoch {:>2}  loss {:.4}  train {:.3}  dev {:.3}  ({:.0}s)",
            log.epoch,
            log.train_loss,
            log.train_accuracy,
            log.dev_accuracy.unwrap_or(f64::NAN),
            start.elapsed().as_secs_f64()
        );
    })?;

    let majority = MajorityBaseline::fit(train)?.evaluate(dev)?;
    println!(
        "best dev accuracy {:.3} at epoch {}; majority baseline {:.3}",
        outcome.best_dev_accuracy.unwrap_or(0.0),
        outcome.best_epoch,
        majority.accuracy
    );
    Ok(())
}
