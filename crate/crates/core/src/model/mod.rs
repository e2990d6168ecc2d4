//! Encoder → entity gating → relation gating → interaction → classifier.

mod check;
mod checkpoint;
mod config;
mod loss;
mod trace;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Label, WiqaExample};
use crate::encoder::{Encoder, Vocabulary};
use crate::error::{Error, Result};
use crate::gating::{
    entity_gate, pool_entities, relation_candidates, relation_gate, GatedEntities,
    GatedRelations, Provenance,
};
use crate::interaction::{cim, InteractionMode, InteractionParams, MultiHeadInteraction};
use crate::numerics::nn::{Activation, Linear, Mlp};
use crate::numerics::{ParamStore, Real, Tape, Var};

pub use crate::gating::relation_count;
pub use checkpoint::{
    load_embedding_table, read_tensors, save_embedding_table, write_tensors, Manifest,
    TensorEntry, FORMAT_VERSION,
};
pub use check::{check_model_gradients, TIE_MARGIN};
pub use config::RgnConfig;
pub use loss::{consistency_loss, consistency_loss_on_tape, mirror_probabilities};
pub use trace::{EntityTrace, GateTrace, RelationEnd, RelationTrace};
pub use train::{
    evaluate_accuracy, EncodedExample, EpochLog, TrainConfig, TrainOutcome, Trainer,
};

/// Interaction stage parameters, by mode.
#[derive(Clone, Debug)]
pub enum InteractionBlock {
    Cim(InteractionParams),
    MultiHead(MultiHeadInteraction),
    None,
}

/// Architecture: parameter handles into a [`ParamStore`], independent of
/// the scalar type.
#[derive(Clone, Debug)]
pub struct Rgn {
    pub config: RgnConfig,
    pub encoder: Encoder,
    pub question_scorer: Option<Mlp>,
    pub paragraph_scorer: Option<Mlp>,
    pub relation_map: Option<Linear>,
    pub relation_scorer: Option<Mlp>,
    pub interaction: InteractionBlock,
    pub classifier: Mlp,
}

/// Tape handles and gate contents of one forward pass.
#[derive(Clone, Debug)]
pub struct Forward<T: Real> {
    pub logits: Var,
    /// `F` before flattening.
    pub representation: Var,
    pub question: Option<GatedEntities<T>>,
    pub paragraph: Option<GatedEntities<T>>,
    pub provenance: Vec<Provenance>,
    pub relations: Option<GatedRelations<T>>,
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(output))
        .collect()
}

impl Rgn {
    pub fn new<T: Real>(
        store: &mut ParamStore<T>,
        config: &RgnConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        let d = config.encoder.d;
        let encoder = Encoder::new(store, &config.encoder, config.vocab_size, rng)?;
        let (question_scorer, paragraph_scorer) = if config.use_entity_gating {
            let w = widths(d, &config.entity_hidden, 1);
            (
                Some(Mlp::new(store, "gate.question", &w, Activation::Relu, rng)?),
                Some(Mlp::new(store, "gate.paragraph", &w, Activation::Relu, rng)?),
            )
        } else {
            (None, None)
        };
        let (relation_map, relation_scorer) = if config.use_relation_gating {
            (
                Some(Linear::new(store, "relation.map", 2 * d, 2 * d, rng)?),
                Some(Mlp::new(
                    store,
                    "relation.score",
                    &widths(2 * d, &config.relation_hidden, 1),
                    Activation::Relu,
                    rng,
                )?),
            )
        } else {
            (None, None)
        };
        let interaction = match config.interaction_mode {
            InteractionMode::Cim => InteractionBlock::Cim(InteractionParams::new(
                store,
                "interaction",
                d,
                config.side_rows(),
                rng,
            )?),
            InteractionMode::MultiHead => InteractionBlock::MultiHead(MultiHeadInteraction::new(
                store,
                "interaction",
                d,
                &config.multi_head,
                rng,
            )?),
            InteractionMode::None => InteractionBlock::None,
        };
        let (rows, cols) = config.representation_shape();
        let classifier = Mlp::new(
            store,
            "classifier",
            &[rows * cols, config.classifier_hidden, 3],
            Activation::Relu,
            rng,
        )?;
        Ok(Self {
            config: config.clone(),
            encoder,
            question_scorer,
            paragraph_scorer,
            relation_map,
            relation_scorer,
            interaction,
            classifier,
        })
    }

    /// Builds the architecture and a freshly initialised store from
    /// `config.seed`.
    pub fn initialize<T: Real>(config: &RgnConfig) -> Result<(Self, ParamStore<T>)> {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let rgn = Self::new(&mut store, config, &mut rng)?;
        Ok((rgn, store))
    }

    pub fn forward<T: Real>(
        &self,
        tape: &mut Tape<'_, T>,
        question: &[usize],
        paragraph: &[usize],
    ) -> Result<Forward<T>> {
        let cfg = &self.config;
        let enc = self.encoder.encode(tape, question, paragraph)?;

        let (v_q, v_c, gq, gc) = match (&self.question_scorer, &self.paragraph_scorer) {
            (Some(qs), Some(cs)) => {
                let gq = entity_gate(tape, enc.e_q, &enc.q_mask, cfg.k, qs)?;
                let gc = entity_gate(tape, enc.e_c, &enc.c_mask, cfg.k, cs)?;
                (gq.v, gc.v, Some(gq), Some(gc))
            }
            _ => {
                let rows = cfg.side_rows();
                let pad = |len: usize| -> Vec<Option<usize>> {
                    (0..rows).map(|i| (i < len).then_some(i)).collect()
                };
                let v_q = tape.gather_rows(enc.e_q, &pad(cfg.encoder.m))?;
                let v_c = tape.gather_rows(enc.e_c, &pad(cfg.encoder.n))?;
                (v_q, v_c, None, None)
            }
        };

        let mut parts = match &self.interaction {
            InteractionBlock::Cim(p) => {
                let out = cim(tape, v_q, v_c, p)?;
                vec![out.f_q, out.f_c]
            }
            InteractionBlock::MultiHead(m) => {
                let out = m.forward(tape, v_q, v_c)?;
                vec![out.f_q, out.f_c]
            }
            InteractionBlock::None => vec![tape.concat_cols(&[v_q, v_c])?],
        };

        let mut provenance = Vec::new();
        let mut relations = None;
        if let (Some(map), Some(scorer), Some(gq), Some(gc)) =
            (&self.relation_map, &self.relation_scorer, &gq, &gc)
        {
            let pooled = pool_entities(tape, gq, gc)?;
            let cands = relation_candidates(tape, &pooled, map)?;
            let gr = relation_gate(tape, &cands, cfg.k, scorer)?;
            parts.push(gr.f_rel);
            provenance = pooled.provenance;
            relations = Some(gr);
        }

        let representation = tape.concat_rows(&parts)?;
        let (rows, cols) = tape.shape(representation);
        if (rows, cols) != cfg.representation_shape() {
            return Err(Error::Dimension {
                op: "representation",
                left: (rows, cols),
                right: cfg.representation_shape(),
            });
        }
        let flat = tape.reshape(representation, 1, rows * cols)?;
        let logits = self.classifier.forward(tape, flat)?;
        Ok(Forward {
            logits,
            representation,
            question: gq,
            paragraph: gc,
            provenance,
            relations,
        })
    }
}

/// Class distribution for one example.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub logits: [f64; 3],
    pub probabilities: [f64; 3],
    pub label: Label,
}

impl Prediction {
    pub fn from_logits<T: Real>(logits: &[T]) -> Result<Self> {
        if logits.len() != 3 {
            return Err(Error::Dimension {
                op: "prediction",
                left: (1, logits.len()),
                right: (1, 3),
            });
        }
        let l = [logits[0].as_f64(), logits[1].as_f64(), logits[2].as_f64()];
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite logits {l:?}")));
        }
        let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = l.map(|v| (v - max).exp());
        let z: f64 = e.iter().sum();
        let probabilities = e.map(|v| v / z);
        let best = (1..3).fold(0, |b, i| if l[i] > l[b] { i } else { b });
        Ok(Self {
            logits: l,
            probabilities,
            label: Label::from_index(best)?,
        })
    }
}

/// A trained or freshly initialised model with its vocabulary.
#[derive(Clone, Debug)]
pub struct RgnModel {
    pub rgn: Rgn,
    pub store: ParamStore<f32>,
    pub vocab: Vocabulary,
}

impl RgnModel {
    /// Initialises parameters for `config` over `vocab`.
    pub fn new(config: &RgnConfig, vocab: Vocabulary) -> Result<Self> {
        let config = RgnConfig {
            vocab_size: vocab.len(),
            ..config.clone()
        };
        let (rgn, store) = Rgn::initialize(&config)?;
        Ok(Self { rgn, store, vocab })
    }

    pub fn config(&self) -> &RgnConfig {
        &self.rgn.config
    }

    pub fn fingerprint(&self) -> String {
        self.rgn.config.fingerprint()
    }

    pub fn num_parameters(&self) -> usize {
        self.store.num_scalars()
    }

    pub fn encode_example(&self, ex: &WiqaExample) -> Result<EncodedExample> {
        Ok(EncodedExample::new(ex, &self.vocab))
    }

    /// Prediction plus the gate contents behind it.
    pub fn forward_example(&self, ex: &WiqaExample) -> Result<(Prediction, GateTrace)> {
        let enc = self.encode_example(ex)?;
        let mut tape = Tape::new(&self.store);
        let fwd = self.rgn.forward(&mut tape, &enc.question, &enc.paragraph)?;
        let prediction = Prediction::from_logits(tape.value(fwd.logits).as_slice())?;
        let trace = GateTrace::build(ex, &fwd, self.fingerprint());
        Ok((prediction, trace))
    }

    pub fn predict(&self, ex: &WiqaExample) -> Result<Prediction> {
        self.predict_encoded(&self.encode_example(ex)?)
    }

    pub fn predict_encoded(&self, enc: &EncodedExample) -> Result<Prediction> {
        let mut tape = Tape::new(&self.store);
        let fwd = self.rgn.forward(&mut tape, &enc.question, &enc.paragraph)?;
        Prediction::from_logits(tape.value(fwd.logits).as_slice())
    }

    /// Predictions in input order.
    pub fn predict_all(&self, examples: &[WiqaExample]) -> Result<Vec<Prediction>> {
        examples.par_iter().map(|ex| self.predict(ex)).collect()
    }

    pub fn inspect_all(&self, examples: &[WiqaExample]) -> Result<Vec<GateTrace>> {
        examples
            .par_iter()
            .map(|ex| self.forward_example(ex).map(|(_, t)| t))
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::numerics::Matrix;

    pub(crate) fn tiny_config() -> RgnConfig {
        RgnConfig {
            encoder: EncoderConfig {
                d: 8,
                m: 8,
                n: 12,
                mixing_layers: 1,
                heads: 2,
                ..EncoderConfig::default()
            },
            vocab_size: 20,
            k: 2,
            entity_hidden: vec![6, 6],
            relation_hidden: vec![6, 6],
            classifier_hidden: 6,
            ..RgnConfig::default()
        }
    }

    #[test]
    fn representation_is_three_k_by_two_d() {
        let (rgn, store) = Rgn::initialize::<f64>(&tiny_config()).unwrap();
        let mut t = Tape::new(&store);
        let f = rgn.forward(&mut t, &[4, 5, 6], &[7, 8, 9, 10, 11]).unwrap();
        assert_eq!(t.shape(f.representation), (6, 16));
        assert_eq!(t.shape(f.logits), (1, 3));
        assert!(f.provenance.iter().all(|p| p.slot < 2));
    }

    #[test]
    fn zero_classifier_gives_uniform() {
        let (rgn, mut store) = Rgn::initialize::<f64>(&tiny_config()).unwrap();
        for l in &rgn.classifier.layers {
            let (r, c) = store.value(l.weight).shape();
            store.get_mut(l.weight).value = Matrix::zeros(r, c);
        }
        let mut t = Tape::new(&store);
        let f = rgn.forward(&mut t, &[4, 5], &[6, 7]).unwrap();
        let p = Prediction::from_logits(t.value(f.logits).as_slice()).unwrap();
        for v in p.probabilities {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ablations_build_and_run() {
        let base = tiny_config();
        let variants = [
            RgnConfig { use_relation_gating: false, ..base.clone() },
            RgnConfig { use_relation_gating: false, use_entity_gating: false, ..base.clone() },
            RgnConfig { interaction_mode: InteractionMode::None, ..base.clone() },
            RgnConfig {
                interaction_mode: InteractionMode::MultiHead,
                multi_head: crate::interaction::MultiHeadConfig { layers: 1, heads: 2, ffn_hidden: None },
                ..base.clone()
            },
        ];
        let full = Rgn::initialize::<f32>(&base).unwrap().1.num_scalars();
        for cfg in variants {
            let (rgn, store) = Rgn::initialize::<f32>(&cfg).unwrap();
            let mut t = Tape::new(&store);
            let f = rgn.forward(&mut t, &[4, 5], &[6, 7, 8]).unwrap();
            assert_eq!(t.shape(f.representation), cfg.representation_shape());
            if !cfg.use_entity_gating {
                assert!(store.num_scalars() != full);
            }
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        let p = Prediction::from_logits(&[1.0f64, 2.0, 2.0]).unwrap();
        assert_eq!(p.label, Label::Less);
        let p = Prediction::from_logits(&[0.0f64, 0.0, 0.0]).unwrap();
        assert_eq!(p.label, Label::More);
        assert!(Prediction::from_logits(&[f64::NAN, 0.0, 0.0]).is_err());
    }
}
