use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{consistency_loss_on_tape, Rgn, RgnModel};
use crate::data::{flip_question, Label, WiqaExample};
use crate::encoder::{Vocabulary, PARAM_PREFIX};
use crate::error::{Error, Result};
use crate::numerics::{AdamConfig, AdamState, Gradients, ParamStore, Tape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Hard cap on epochs.
    pub epochs: usize,
    pub batch_size: usize,
    /// Batches whose gradients are summed before one optimizer step.
    pub grad_accumulation: usize,
    /// Epochs without a dev improvement before stopping.
    pub patience: usize,
    pub optimizer: AdamConfig,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 8,
            batch_size: 4,
            grad_accumulation: 1,
            patience: 3,
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.grad_accumulation == 0 {
            return Err(Error::Config(
                "batch_size and grad_accumulation must be positive".into(),
            ));
        }
        let lr = self.optimizer.learning_rate;
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::Config(format!("learning rate {lr} must be positive")));
        }
        Ok(())
    }
}

/// Token ids of one example.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedExample {
    pub id: String,
    pub question: Vec<usize>,
    pub paragraph: Vec<usize>,
    pub label: Option<Label>,
}

impl EncodedExample {
    pub fn new(ex: &WiqaExample, vocab: &Vocabulary) -> Self {
        Self {
            id: ex.id.clone(),
            question: vocab.encode(&ex.question_tokens),
            paragraph: vocab.encode(&ex.paragraph_tokens),
            label: ex.label,
        }
    }

    fn gold(&self) -> Result<Label> {
        self.label
            .ok_or_else(|| Error::Data(format!("example {} has no label", self.id)))
    }
}

struct TrainItem {
    example: EncodedExample,
    flipped: Option<EncodedExample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: u64,
    pub encoder_frozen: bool,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_accuracy: Option<f64>,
    /// Fraction of training examples with a polarity-flipped partner in
    /// the loss; zero when the consistency term is off.
    pub pair_coverage: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_dev_accuracy: Option<f64>,
    pub stopped_early: bool,
}

/// Fraction of labelled examples the model gets right.
pub fn evaluate_accuracy(rgn: &Rgn, store: &ParamStore<f32>, data: &[EncodedExample]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let hits = data
        .par_iter()
        .map(|ex| -> Result<usize> {
            let gold = ex.gold()?;
            let mut tape = Tape::new(store);
            let f = rgn.forward(&mut tape, &ex.question, &ex.paragraph)?;
            let p = super::Prediction::from_logits(tape.value(f.logits).as_slice())?;
            Ok(usize::from(p.label == gold))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
}

pub struct Trainer {
    pub config: TrainConfig,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    /// Trains in place. With a non-empty dev set the parameters of the best
    /// dev epoch are restored at the end; otherwise the last epoch's stay.
    pub fn train(
        &self,
        model: &mut RgnModel,
        train: &[WiqaExample],
        dev: &[WiqaExample],
        mut on_epoch: impl FnMut(&EpochLog),
    ) -> Result<TrainOutcome> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("training on an empty batch set".into()));
        }
        let cfg = &self.config;
        let mcfg = model.rgn.config.clone();
        let items: Vec<TrainItem> = train
            .iter()
            .map(|ex| {
                let example = EncodedExample::new(ex, &model.vocab);
                example.gold()?;
                let flipped = if mcfg.use_consistency {
                    flip_question(ex).map(|f| EncodedExample::new(&f, &model.vocab))
                } else {
                    None
                };
                Ok(TrainItem { example, flipped })
            })
            .collect::<Result<_>>()?;
        let train_enc: Vec<EncodedExample> = items.iter().map(|i| i.example.clone()).collect();
        let dev_enc: Vec<EncodedExample> = dev
            .iter()
            .map(|ex| EncodedExample::new(ex, &model.vocab))
            .collect();
        let pair_coverage =
            items.iter().filter(|i| i.flipped.is_some()).count() as f64 / items.len() as f64;

        let mut adam = AdamState::new(&model.store, cfg.optimizer);
        let mut order: Vec<usize> = (0..items.len()).collect();
        let mut logs = Vec::new();
        let mut best: Option<(f64, usize, ParamStore<f32>)> = None;
        let mut since_best = 0;
        let mut stopped_early = false;
        let mut steps = 0u64;

        for epoch in 0..cfg.epochs {
            let frozen = epoch < mcfg.encoder.freeze_epochs;
            model.store.set_trainable_prefix(PARAM_PREFIX, !frozen);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64));
            order.shuffle(&mut rng);

            let mut loss_sum = 0.0;
            let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
            model.store.zero_grad();
            for (b, batch) in batches.iter().enumerate() {
                let batch_items: Vec<&TrainItem> = batch.iter().map(|&i| &items[i]).collect();
                let (grads, loss) = batch_gradients(
                    &model.rgn,
                    &model.store,
                    &batch_items,
                    mcfg.use_consistency,
                    mcfg.consistency_weight,
                )?;
                if !loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite loss {loss} at epoch {epoch}, step {steps}"
                    )));
                }
                loss_sum += loss;
                let scale = 1.0 / cfg.grad_accumulation as f32;
                for g in &grads {
                    model.store.accumulate(g, scale)?;
                }
                if (b + 1) % cfg.grad_accumulation == 0 || b + 1 == batches.len() {
                    adam.step(&mut model.store)?;
                    model.store.zero_grad();
                    steps += 1;
                }
            }

            let train_accuracy = evaluate_accuracy(&model.rgn, &model.store, &train_enc)?;
            let dev_accuracy = if dev_enc.is_empty() {
                None
            } else {
                Some(evaluate_accuracy(&model.rgn, &model.store, &dev_enc)?)
            };
            let log = EpochLog {
                epoch,
                steps,
                encoder_frozen: frozen,
                train_loss: loss_sum / batches.len() as f64,
                train_accuracy,
                dev_accuracy,
                pair_coverage,
            };
            on_epoch(&log);
            logs.push(log);

            if let Some(acc) = dev_accuracy {
                if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
                    best = Some((acc, epoch, model.store.clone()));
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= cfg.patience {
                        stopped_early = epoch + 1 < cfg.epochs;
                        break;
                    }
                }
            }
        }

        model.store.set_trainable_prefix(PARAM_PREFIX, true);
        model.store.zero_grad();
        let (best_epoch, best_dev_accuracy) = match best {
            Some((acc, epoch, store)) => {
                model.store = store;
                model.store.set_trainable_prefix(PARAM_PREFIX, true);
                (epoch, Some(acc))
            }
            None => (logs.len().saturating_sub(1), None),
        };
        Ok(TrainOutcome {
            epochs: logs,
            best_epoch,
            best_dev_accuracy,
            stopped_early,
        })
    }
}

/// Per-example gradients of one batch, in batch order, and the batch loss.
///
/// Loss per example: `CE / B + λ · consistency / P` where `P` counts the
/// examples of the batch that have a flipped partner.
fn batch_gradients(
    rgn: &Rgn,
    store: &ParamStore<f32>,
    batch: &[&TrainItem],
    use_consistency: bool,
    lambda: f64,
) -> Result<(Vec<Gradients<f32>>, f64)> {
    let b = batch.len() as f32;
    let pairs = batch.iter().filter(|i| i.flipped.is_some()).count().max(1) as f32;
    let results = batch
        .par_iter()
        .map(|item| -> Result<(Gradients<f32>, f64)> {
            let ex = &item.example;
            let mut tape = Tape::new(store);
            let f = rgn.forward(&mut tape, &ex.question, &ex.paragraph)?;
            let ce = tape.cross_entropy(f.logits, ex.gold()?.index())?;
            let mut loss = tape.scale(ce, 1.0 / b);
            if let (true, Some(fl)) = (use_consistency, &item.flipped) {
                let g = rgn.forward(&mut tape, &fl.question, &fl.paragraph)?;
                let c = consistency_loss_on_tape(&mut tape, f.logits, g.logits)?;
                let c = tape.scale(c, lambda as f32 / pairs);
                loss = tape.add(loss, c)?;
            }
            let value = f64::from(tape.scalar(loss));
            Ok((tape.backward(loss)?, value))
        })
        .collect::<Result<Vec<_>>>()?;
    let loss = results.iter().map(|(_, l)| l).sum();
    Ok((results.into_iter().map(|(g, _)| g).collect(), loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SyntheticSpec};
    use crate::model::tests::tiny_config;
    use crate::model::RgnConfig;

    fn setup(n: usize, cfg: RgnConfig) -> (RgnModel, Vec<WiqaExample>) {
        let data = synth_generate(&SyntheticSpec {
            num_examples: n,
            num_entities: 4,
            max_hops: 1,
            seed: 3,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let vocab = Vocabulary::build(
            data.iter()
                .flat_map(|e| [&e.question_tokens, &e.paragraph_tokens]),
            1,
        )
        .unwrap();
        (RgnModel::new(&cfg, vocab).unwrap(), data)
    }

    #[test]
    fn memorises_a_small_set() {
        let cfg = RgnConfig {
            encoder: crate::encoder::EncoderConfig {
                n: 24,
                freeze_epochs: 0,
                ..tiny_config().encoder
            },
            ..tiny_config()
        };
        let (mut model, data) = setup(16, cfg);
        let trainer = Trainer::new(TrainConfig {
            epochs: 50,
            patience: 50,
            optimizer: AdamConfig {
                learning_rate: 0.01,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        })
        .unwrap();
        let out = trainer.train(&mut model, &data, &[], |_| {}).unwrap();
        let first = out.epochs[0].train_loss;
        let last = out.epochs.last().unwrap();
        assert!(last.train_loss < 0.1 * first, "{first} -> {}", last.train_loss);
        assert_eq!(last.train_accuracy, 1.0);
    }

    #[test]
    fn deterministic_logs_and_params() {
        let run = || {
            let (mut model, data) = setup(12, tiny_config());
            let trainer = Trainer::new(TrainConfig {
                epochs: 3,
                ..TrainConfig::default()
            })
            .unwrap();
            let out = trainer
                .train(&mut model, &data[..8], &data[8..], |_| {})
                .unwrap();
            (out.epochs, model.store)
        };
        let (la, sa) = run();
        let (lb, sb) = run();
        assert_eq!(la, lb);
        assert!(sa.same_values(&sb));
    }

    #[test]
    fn consistency_pairs_are_counted() {
        let cfg = RgnConfig {
            use_consistency: true,
            ..tiny_config()
        };
        let (mut model, data) = setup(6, cfg);
        let trainer = Trainer::new(TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        })
        .unwrap();
        let out = trainer.train(&mut model, &data, &[], |_| {}).unwrap();
        assert_eq!(out.epochs[0].pair_coverage, 1.0);
    }

    #[test]
    fn frozen_encoder_does_not_move() {
        let (mut model, data) = setup(6, tiny_config());
        let before = model.store.value(model.rgn.encoder.token_embedding).clone();
        let trainer = Trainer::new(TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        })
        .unwrap();
        trainer.train(&mut model, &data, &[], |_| {}).unwrap();
        assert_eq!(model.store.value(model.rgn.encoder.token_embedding), &before);
        let cls = model.rgn.classifier.layers[0].weight;
        assert!(model.store.get(cls).trainable);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Trainer::new(TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        })
        .is_err());
        let (mut model, _) = setup(3, tiny_config());
        let trainer = Trainer::new(TrainConfig::default()).unwrap();
        assert!(matches!(
            trainer.train(&mut model, &[], &[], |_| {}),
            Err(Error::InvalidArgument(_))
        ));
    }
}
