//! Trainable stand-in for a pre-trained contextual encoder.
//!
//! The question and paragraph are laid out as one sequence
//! `[CLS] q [SEP] C [SEP]`, embedded (token + learned position), mixed by a
//! few bidirectional self-attention layers, then split back into a 1×d
//! `[CLS]` row, an m×d question block and an n×d paragraph block whose
//! padding rows are exactly zero.

mod tokenize;
mod vocab;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::nn::{EncoderLayer, LayerNorm};
use crate::numerics::{Matrix, ParamId, ParamStore, Real, Tape, Var};

pub use tokenize::tokenize;
pub use vocab::{Vocabulary, CLS, PAD, SEP, UNK};

/// Prefix shared by every encoder parameter name.
pub const PARAM_PREFIX: &str = "encoder.";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    /// Embedding width.
    pub d: usize,
    /// Question block length, special tokens included.
    pub m: usize,
    /// Paragraph block length.
    pub n: usize,
    pub mixing_layers: usize,
    pub heads: usize,
    /// Feed-forward width inside mixing layers; `None` means `2 d`.
    pub ffn_hidden: Option<usize>,
    /// Epochs during which every encoder parameter stays frozen.
    pub freeze_epochs: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            d: 64,
            m: 32,
            n: 64,
            mixing_layers: 1,
            heads: 4,
            ffn_hidden: None,
            freeze_epochs: 2,
        }
    }
}

impl EncoderConfig {
    /// BERT-base widths: 768-wide, 128-token questions, 256-token paragraphs.
    pub fn bert_base_scale() -> Self {
        Self {
            d: 768,
            m: 128,
            n: 256,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.heads == 0 || self.d % self.heads != 0 {
            return Err(Error::Config(format!(
                "encoder width {} must be a positive multiple of heads {}",
                self.d, self.heads
            )));
        }
        if self.m < 2 || self.n < 2 {
            return Err(Error::Config(format!(
                "max lengths must leave room for special tokens (m={}, n={})",
                self.m, self.n
            )));
        }
        Ok(())
    }

    pub fn ffn_width(&self) -> usize {
        self.ffn_hidden.unwrap_or(2 * self.d)
    }

    pub fn max_question_tokens(&self) -> usize {
        self.m - 2
    }

    pub fn max_paragraph_tokens(&self) -> usize {
        self.n - 1
    }
}

/// Encoder output as tape nodes.
#[derive(Clone, Debug)]
pub struct EncodedVars {
    pub e_cls: Var,
    pub e_q: Var,
    pub e_c: Var,
    pub q_mask: Vec<bool>,
    pub c_mask: Vec<bool>,
}

/// Materialised encoder output.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedInput<T: Real = f32> {
    pub e_cls: Matrix<T>,
    pub e_q: Matrix<T>,
    pub e_c: Matrix<T>,
    pub q_mask: Vec<bool>,
    pub c_mask: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub vocab_size: usize,
    pub token_embedding: ParamId,
    pub position_embedding: ParamId,
    pub layers: Vec<EncoderLayer>,
    pub final_norm: LayerNorm,
}

impl Encoder {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        config: &EncoderConfig,
        vocab_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if vocab_size <= UNK {
            return Err(Error::Config(format!(
                "vocabulary of {vocab_size} tokens lacks the reserved ids"
            )));
        }
        let d = config.d;
        let bound = 1.0 / (d as f64).sqrt();
        let token_embedding = store.add(
            format!("{PARAM_PREFIX}token_embedding"),
            Matrix::uniform(vocab_size, d, bound, rng),
        )?;
        let position_embedding = store.add(
            format!("{PARAM_PREFIX}position_embedding"),
            Matrix::uniform(config.m + config.n, d, bound, rng),
        )?;
        let layers = (0..config.mixing_layers)
            .map(|l| {
                EncoderLayer::new(
                    store,
                    &format!("{PARAM_PREFIX}layer{l}"),
                    d,
                    config.heads,
                    config.ffn_width(),
                    rng,
                )
            })
            .collect::<Result<_>>()?;
        let final_norm = LayerNorm::new(store, &format!("{PARAM_PREFIX}final_norm"), d)?;
        Ok(Self {
            config: config.clone(),
            vocab_size,
            token_embedding,
            position_embedding,
            layers,
            final_norm,
        })
    }

    /// Encodes one question/paragraph pair of token ids.
    pub fn encode<T: Real>(
        &self,
        tape: &mut Tape<'_, T>,
        question: &[usize],
        paragraph: &[usize],
    ) -> Result<EncodedVars> {
        let cfg = &self.config;
        let q = &question[..question.len().min(cfg.max_question_tokens())];
        let c = &paragraph[..paragraph.len().min(cfg.max_paragraph_tokens())];
        if let Some(&bad) = q.iter().chain(c).find(|&&id| id >= self.vocab_size) {
            return Err(Error::Corruption(format!(
                "token id {bad} outside vocabulary of {}",
                self.vocab_size
            )));
        }

        let mut ids = Vec::with_capacity(q.len() + c.len() + 3);
        ids.push(Some(CLS));
        ids.extend(q.iter().map(|&i| Some(i)));
        ids.push(Some(SEP));
        let c_start = ids.len();
        ids.extend(c.iter().map(|&i| Some(i)));
        ids.push(Some(SEP));
        let positions: Vec<Option<usize>> = (0..ids.len()).map(Some).collect();

        let tokens = tape.param(self.token_embedding);
        let pos = tape.param(self.position_embedding);
        let x = tape.gather_rows(tokens, &ids)?;
        let p = tape.gather_rows(pos, &positions)?;
        let mut h = tape.add(x, p)?;
        for layer in &self.layers {
            h = layer.forward(tape, h)?;
        }
        let h = self.final_norm.forward(tape, h)?;

        let e_cls = tape.slice_rows(h, 0, 1)?;
        let q_rows: Vec<Option<usize>> = (0..cfg.m)
            .map(|i| (i < q.len()).then_some(1 + i))
            .collect();
        let c_rows: Vec<Option<usize>> = (0..cfg.n)
            .map(|i| (i < c.len()).then_some(c_start + i))
            .collect();
        let e_q = tape.gather_rows(h, &q_rows)?;
        let e_c = tape.gather_rows(h, &c_rows)?;
        Ok(EncodedVars {
            e_cls,
            e_q,
            e_c,
            q_mask: q_rows.iter().map(Option::is_some).collect(),
            c_mask: c_rows.iter().map(Option::is_some).collect(),
        })
    }

    pub fn encode_values<T: Real>(
        &self,
        store: &ParamStore<T>,
        question: &[usize],
        paragraph: &[usize],
    ) -> Result<EncodedInput<T>> {
        let mut tape = Tape::new(store);
        let enc = self.encode(&mut tape, question, paragraph)?;
        Ok(EncodedInput {
            e_cls: tape.value(enc.e_cls).clone(),
            e_q: tape.value(enc.e_q).clone(),
            e_c: tape.value(enc.e_c).clone(),
            q_mask: enc.q_mask,
            c_mask: enc.c_mask,
        })
    }

    /// Replaces the token table, e.g. with externally computed vectors.
    pub fn set_token_embedding<T: Real>(
        &self,
        store: &mut ParamStore<T>,
        table: Matrix<T>,
    ) -> Result<()> {
        let expected = store.value(self.token_embedding).shape();
        if table.shape() != expected {
            return Err(Error::Dimension {
                op: "set_token_embedding",
                left: expected,
                right: table.shape(),
            });
        }
        store.get_mut(self.token_embedding).value = table;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(mixing_layers: usize) -> (ParamStore<f64>, Encoder) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = EncoderConfig {
            d: 8,
            m: 6,
            n: 8,
            mixing_layers,
            heads: 2,
            ..EncoderConfig::default()
        };
        let enc = Encoder::new(&mut store, &cfg, 12, &mut rng).unwrap();
        (store, enc)
    }

    #[test]
    fn output_shapes_and_zero_padding() {
        let (store, enc) = small(1);
        let out = enc.encode_values(&store, &[4, 5], &[6, 7, 8]).unwrap();
        assert_eq!(out.e_cls.shape(), (1, 8));
        assert_eq!(out.e_q.shape(), (6, 8));
        assert_eq!(out.e_c.shape(), (8, 8));
        assert_eq!(out.q_mask.iter().filter(|&&m| m).count(), 2);
        for r in 3..8 {
            assert!(out.e_c.row(r).iter().all(|&v| v == 0.0));
        }
        for r in 2..6 {
            assert!(out.e_q.row(r).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn truncation_keeps_special_tokens() {
        let (store, enc) = small(1);
        let long_q: Vec<usize> = (0..20).map(|i| 4 + i % 8).collect();
        let long_c: Vec<usize> = (0..30).map(|i| 4 + i % 8).collect();
        let out = enc.encode_values(&store, &long_q, &long_c).unwrap();
        assert_eq!(out.q_mask.iter().filter(|&&m| m).count(), 4);
        assert_eq!(out.c_mask.iter().filter(|&&m| m).count(), 7);
    }

    #[test]
    fn out_of_range_id_is_corruption() {
        let (store, enc) = small(1);
        assert!(matches!(
            enc.encode_values(&store, &[99], &[4]),
            Err(Error::Corruption(_))
        ));
    }

    #[test]
    fn without_mixing_rows_are_local() {
        let (store, enc) = small(0);
        let a = enc.encode_values(&store, &[4, 5], &[6, 7]).unwrap();
        let b = enc.encode_values(&store, &[4, 5], &[9, 10, 11]).unwrap();
        assert_eq!(a.e_q, b.e_q);

        let (store, enc) = small(1);
        let a = enc.encode_values(&store, &[4, 5], &[6, 7]).unwrap();
        let b = enc.encode_values(&store, &[4, 5], &[9, 10, 11]).unwrap();
        assert_ne!(a.e_q, b.e_q);
    }

    #[test]
    fn deterministic() {
        let (store, enc) = small(2);
        let a = enc.encode_values(&store, &[4, 5, 6], &[7, 8]).unwrap();
        let b = enc.encode_values(&store, &[4, 5, 6], &[7, 8]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_reaches_only_used_embeddings() {
        let (store, enc) = small(1);
        let mut tape = Tape::new(&store);
        let out = enc.encode(&mut tape, &[4, 5], &[6]).unwrap();
        let s = tape.sum_all(out.e_q);
        let l = tape.matmul(s, s).unwrap();
        let grads = tape.backward(l).unwrap();
        let g = grads.get(enc.token_embedding).unwrap();
        for id in [4, 5, 6, CLS, SEP] {
            assert!(g.row(id).iter().any(|&v| v != 0.0), "token {id}");
        }
        for id in [PAD, UNK, 7, 8, 11] {
            assert!(g.row(id).iter().all(|&v| v == 0.0), "token {id}");
        }
    }
}
