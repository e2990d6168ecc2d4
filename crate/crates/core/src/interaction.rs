//! Contextual interaction between gated question and paragraph entities.
//!
//! The bilinear module computes `(A W) B / sqrt(d)` for self (A = B) and
//! cross (A from the other side) terms and concatenates them on the feature
//! axis. The multi-head alternative runs a transformer encoder stack over
//! the 2k pooled rows and projects each half to the same k×2d output, so
//! both are interchangeable inside the model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::nn::{encoder_layer_flops, init_weight, EncoderLayer, Linear};
use crate::numerics::{ParamId, ParamStore, Real, Tape, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionMode {
    #[default]
    Cim,
    MultiHead,
    None,
}

/// `(a · w) · b / sqrt(d)` with `a, b: k×d` and `w: d×k`.
pub fn bilinear_interact<T: Real>(tape: &mut Tape<'_, T>, a: Var, b: Var, w: Var) -> Result<Var> {
    let (sa, sb, sw) = (tape.shape(a), tape.shape(b), tape.shape(w));
    if sa != sb || sw != (sa.1, sa.0) {
        return Err(Error::Dimension {
            op: "bilinear_interact",
            left: sa,
            right: sw,
        });
    }
    let scores = tape.matmul(a, w)?;
    let scores = tape.scale(scores, T::of(1.0 / (sa.1 as f64).sqrt()));
    tape.matmul(scores, b)
}

#[derive(Clone, Debug)]
pub struct InteractionParams {
    pub w_self_q: ParamId,
    pub w_cross_q: ParamId,
    pub w_self_c: ParamId,
    pub w_cross_c: ParamId,
}

impl InteractionParams {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        d: usize,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut add = |suffix: &str| store.add(format!("{name}.{suffix}"), init_weight(d, k, rng));
        Ok(Self {
            w_self_q: add("w_self_q")?,
            w_cross_q: add("w_cross_q")?,
            w_self_c: add("w_self_c")?,
            w_cross_c: add("w_cross_c")?,
        })
    }
}

/// `f_q` and `f_c`, each k×2d: `[self part | cross part]`.
#[derive(Clone, Copy, Debug)]
pub struct InteractionOutput {
    pub f_q: Var,
    pub f_c: Var,
}

pub fn cim<T: Real>(
    tape: &mut Tape<'_, T>,
    v_q: Var,
    v_c: Var,
    params: &InteractionParams,
) -> Result<InteractionOutput> {
    let w_sq = tape.param(params.w_self_q);
    let w_cq = tape.param(params.w_cross_q);
    let w_sc = tape.param(params.w_self_c);
    let w_cc = tape.param(params.w_cross_c);
    let q_self = bilinear_interact(tape, v_q, v_q, w_sq)?;
    let q_cross = bilinear_interact(tape, v_c, v_q, w_cq)?;
    let c_self = bilinear_interact(tape, v_c, v_c, w_sc)?;
    let c_cross = bilinear_interact(tape, v_q, v_c, w_cc)?;
    Ok(InteractionOutput {
        f_q: tape.concat_cols(&[q_self, q_cross])?,
        f_c: tape.concat_cols(&[c_self, c_cross])?,
    })
}

/// Matmul FLOPs of [`cim`]: four bilinear terms of `2(k·d·k + k·k·d)` each.
pub fn cim_flops(k: usize, d: usize) -> u64 {
    let (k, d) = (k as u64, d as u64);
    4 * 2 * (k * d * k + k * k * d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiHeadConfig {
    pub layers: usize,
    pub heads: usize,
    /// Feed-forward width; `None` means `4 d`.
    pub ffn_hidden: Option<usize>,
}

impl Default for MultiHeadConfig {
    fn default() -> Self {
        Self {
            layers: 6,
            heads: 4,
            ffn_hidden: None,
        }
    }
}

impl MultiHeadConfig {
    pub fn ffn_width(&self, d: usize) -> usize {
        self.ffn_hidden.unwrap_or(4 * d)
    }
}

#[derive(Clone, Debug)]
pub struct MultiHeadInteraction {
    pub layers: Vec<EncoderLayer>,
    pub project_q: Linear,
    pub project_c: Linear,
}

impl MultiHeadInteraction {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        d: usize,
        config: &MultiHeadConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if config.heads == 0 || d % config.heads != 0 {
            return Err(Error::Config(format!(
                "{} heads do not divide width {d}",
                config.heads
            )));
        }
        let layers = (0..config.layers)
            .map(|l| {
                EncoderLayer::new(
                    store,
                    &format!("{name}.layer{l}"),
                    d,
                    config.heads,
                    config.ffn_width(d),
                    rng,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            layers,
            project_q: Linear::new(store, &format!("{name}.project_q"), d, 2 * d, rng)?,
            project_c: Linear::new(store, &format!("{name}.project_c"), d, 2 * d, rng)?,
        })
    }

    pub fn forward<T: Real>(
        &self,
        tape: &mut Tape<'_, T>,
        v_q: Var,
        v_c: Var,
    ) -> Result<InteractionOutput> {
        let (kq, _) = tape.shape(v_q);
        let (kc, _) = tape.shape(v_c);
        let mut h = tape.concat_rows(&[v_q, v_c])?;
        for layer in &self.layers {
            h = layer.forward(tape, h)?;
        }
        let hq = tape.slice_rows(h, 0, kq)?;
        let hc = tape.slice_rows(h, kq, kc)?;
        Ok(InteractionOutput {
            f_q: self.project_q.forward(tape, hq)?,
            f_c: self.project_c.forward(tape, hc)?,
        })
    }
}

/// Matmul FLOPs of [`MultiHeadInteraction::forward`] over `k` rows per side.
pub fn multi_head_flops(k: usize, d: usize, config: &MultiHeadConfig) -> u64 {
    let rows = 2 * k;
    let stack = config.layers as u64 * encoder_layer_flops(rows, d, config.ffn_width(d));
    let projections = 2 * (2 * k as u64 * d as u64 * 2 * d as u64);
    stack + projections
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_projection_gives_zero() {
        let mut t = Tape::<f64>::detached();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = t.constant(Matrix::uniform(3, 4, 1.0, &mut rng));
        let b = t.constant(Matrix::uniform(3, 4, 1.0, &mut rng));
        let w = t.constant(Matrix::zeros(4, 3));
        let y = bilinear_interact(&mut t, a, b, w).unwrap();
        assert!(t.value(y).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_case_by_hand() {
        let mut t = Tape::<f64>::detached();
        let a = t.constant(Matrix::row_vector(&[1.0, 2.0, 0.0, -1.0]));
        let b = t.constant(Matrix::row_vector(&[0.5, 0.5, 1.0, 2.0]));
        let w = t.constant(Matrix::column_vector(&[1.0, 1.0, 1.0, 1.0]));
        let y = bilinear_interact(&mut t, a, b, w).unwrap();
        // a·w = 2, / sqrt(4) = 1
        assert_eq!(t.value(y).as_slice(), &[0.5, 0.5, 1.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut t = Tape::<f64>::detached();
        let a = t.constant(Matrix::zeros(3, 4));
        let b = t.constant(Matrix::zeros(3, 4));
        let w = t.constant(Matrix::zeros(4, 2));
        assert!(matches!(
            bilinear_interact(&mut t, a, b, w),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn cim_layout_and_cross_linearity() {
        let mut store = ParamStore::<f64>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = InteractionParams::new(&mut store, "cim", 4, 3, &mut rng).unwrap();
        let vq_m = Matrix::uniform(3, 4, 1.0, &mut rng);
        let mut t = Tape::new(&store);
        let vq = t.constant(vq_m.clone());
        let vc = t.constant(Matrix::uniform(3, 4, 1.0, &mut rng));
        let out = cim(&mut t, vq, vc, &params).unwrap();
        assert_eq!(t.shape(out.f_q), (3, 8));
        assert_eq!(t.shape(out.f_c), (3, 8));
        let self_part = t.slice_cols(out.f_q, 0, 4).unwrap();
        let self_ref = {
            let w = t.param(params.w_self_q);
            bilinear_interact(&mut t, vq, vq, w).unwrap()
        };
        assert_eq!(t.value(self_part), t.value(self_ref));

        let zero_c = t.constant(Matrix::zeros(3, 4));
        let out0 = cim(&mut t, vq, zero_c, &params).unwrap();
        let f = t.value(out0.f_q).clone();
        for r in 0..3 {
            assert!(f.row(r)[4..].iter().all(|&v| v == 0.0));
            assert_eq!(&f.row(r)[..4], t.value(self_part).row(r));
        }
    }

    #[test]
    fn multi_head_is_drop_in() {
        let mut store = ParamStore::<f64>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = MultiHeadConfig {
            layers: 2,
            heads: 2,
            ffn_hidden: None,
        };
        let mha = MultiHeadInteraction::new(&mut store, "mh", 4, &cfg, &mut rng).unwrap();
        let mut t = Tape::new(&store);
        let vq = t.constant(Matrix::uniform(3, 4, 1.0, &mut rng));
        let vc = t.constant(Matrix::uniform(3, 4, 1.0, &mut rng));
        let out = mha.forward(&mut t, vq, vc).unwrap();
        assert_eq!(t.shape(out.f_q), (3, 8));
        assert_eq!(t.shape(out.f_c), (3, 8));
        assert_eq!(t.matmul_flops(), multi_head_flops(3, 4, &cfg));
    }

    #[test]
    fn instrumented_cim_flops_match_formula() {
        let mut store = ParamStore::<f32>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = InteractionParams::new(&mut store, "cim", 16, 5, &mut rng).unwrap();
        let mut t = Tape::new(&store);
        let vq = t.constant(Matrix::uniform(5, 16, 1.0, &mut rng));
        let vc = t.constant(Matrix::uniform(5, 16, 1.0, &mut rng));
        cim(&mut t, vq, vc, &params).unwrap();
        assert_eq!(t.matmul_flops(), cim_flops(5, 16));
    }

    #[test]
    fn multi_head_costs_more_at_bert_base_scale() {
        let cfg = MultiHeadConfig::default();
        assert!(multi_head_flops(10, 768, &cfg) > cim_flops(10, 768));
    }
}
