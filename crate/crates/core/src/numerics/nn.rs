//! Layers assembled from tape primitives.

use rand::Rng;

use super::matrix::{Matrix, Real};
use super::param::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights.
pub fn init_weight<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    Matrix::uniform(rows, cols, 1.0 / (rows.max(1) as f64).sqrt(), rng)
}

/// Affine map `x W + b` with `W: in×out`, `b: 1×out`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = store.add(format!("{name}.weight"), init_weight(input, output, rng))?;
        let bias = store.add(format!("{name}.bias"), Matrix::zeros(1, output))?;
        Ok(Self {
            weight,
            bias,
            input,
            output,
        })
    }

    pub fn forward<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var) -> Result<Var> {
        let w = tape.param(self.weight);
        let b = tape.param(self.bias);
        let y = tape.matmul(x, w)?;
        tape.add_bias(y, b)
    }
}

/// Stack of affine layers with an activation between (never after) them.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activation: Activation,
}

impl Mlp {
    /// `widths = [in, h1, ..., out]`.
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        widths: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "mlp {name} needs at least input and output widths"
            )));
        }
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect::<Result<_>>()?;
        Ok(Self { layers, activation })
    }

    /// Builds an MLP over existing parameters, checking that shapes chain.
    pub fn from_params<T: Real>(
        store: &ParamStore<T>,
        layers: &[(ParamId, ParamId)],
        activation: Activation,
    ) -> Result<Self> {
        let mut out = Vec::with_capacity(layers.len());
        let mut prev: Option<usize> = None;
        for (i, &(w, b)) in layers.iter().enumerate() {
            let (input, output) = store.value(w).shape();
            let bias_shape = store.value(b).shape();
            if let Some(p) = prev {
                if p != input {
                    return Err(Error::LayerShape {
                        layer: store.get(w).name.clone(),
                        index: i,
                        expected: p,
                        found: input,
                    });
                }
            }
            if bias_shape != (1, output) {
                return Err(Error::LayerShape {
                    layer: store.get(b).name.clone(),
                    index: i,
                    expected: output,
                    found: bias_shape.1,
                });
            }
            prev = Some(output);
            out.push(Linear {
                weight: w,
                bias: b,
                input,
                output,
            });
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("mlp without layers".into()));
        }
        Ok(Self {
            layers: out,
            activation,
        })
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output)
    }

    pub fn forward<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var) -> Result<Var> {
        let width = tape.shape(x).1;
        if width != self.layers[0].input {
            return Err(Error::LayerShape {
                layer: "input".into(),
                index: 0,
                expected: self.layers[0].input,
                found: width,
            });
        }
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, h)?;
            if i < last && self.activation == Activation::Relu {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub fn new<T: Real>(store: &mut ParamStore<T>, name: &str, width: usize) -> Result<Self> {
        Ok(Self {
            gain: store.add(format!("{name}.gain"), Matrix::filled(1, width, T::one()))?,
            bias: store.add(format!("{name}.bias"), Matrix::zeros(1, width))?,
        })
    }

    pub fn forward<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var) -> Result<Var> {
        let g = tape.param(self.gain);
        let b = tape.param(self.bias);
        tape.layer_norm(x, g, b, T::of(1e-5))
    }
}

/// Scaled dot-product multi-head self-attention.
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
    pub width: usize,
}

impl MultiHeadAttention {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        width: usize,
        heads: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if heads == 0 || width % heads != 0 {
            return Err(Error::Config(format!(
                "{heads} heads do not divide width {width}"
            )));
        }
        Ok(Self {
            query: Linear::new(store, &format!("{name}.query"), width, width, rng)?,
            key: Linear::new(store, &format!("{name}.key"), width, width, rng)?,
            value: Linear::new(store, &format!("{name}.value"), width, width, rng)?,
            output: Linear::new(store, &format!("{name}.output"), width, width, rng)?,
            heads,
            width,
        })
    }

    pub fn forward<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var) -> Result<Var> {
        self.forward_with_weights(tape, x).map(|(y, _)| y)
    }

    /// Also returns each head's L×L attention matrix.
    pub fn forward_with_weights<T: Real>(
        &self,
        tape: &mut Tape<'_, T>,
        x: Var,
    ) -> Result<(Var, Vec<Var>)> {
        let q = self.query.forward(tape, x)?;
        let k = self.key.forward(tape, x)?;
        let v = self.value.forward(tape, x)?;
        let head_width = self.width / self.heads;
        let scale = T::of(1.0 / (head_width as f64).sqrt());
        let mut heads = Vec::with_capacity(self.heads);
        let mut weights = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let start = h * head_width;
            let qh = tape.slice_cols(q, start, head_width)?;
            let kh = tape.slice_cols(k, start, head_width)?;
            let vh = tape.slice_cols(v, start, head_width)?;
            let kt = tape.transpose(kh);
            let scores = tape.matmul(qh, kt)?;
            let scores = tape.scale(scores, scale);
            let attn = tape.row_softmax(scores, None)?;
            heads.push(tape.matmul(attn, vh)?);
            weights.push(attn);
        }
        let joined = if heads.len() == 1 {
            heads[0]
        } else {
            tape.concat_cols(&heads)?
        };
        Ok((self.output.forward(tape, joined)?, weights))
    }
}

/// Pre-norm transformer encoder layer: attention then a ReLU feed-forward
/// block, each wrapped in a residual connection.
#[derive(Clone, Debug)]
pub struct EncoderLayer {
    pub attention_norm: LayerNorm,
    pub attention: MultiHeadAttention,
    pub ffn_norm: LayerNorm,
    pub ffn: Mlp,
}

impl EncoderLayer {
    pub fn new<T: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        width: usize,
        heads: usize,
        ffn_hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            attention_norm: LayerNorm::new(store, &format!("{name}.attention_norm"), width)?,
            attention: MultiHeadAttention::new(
                store,
                &format!("{name}.attention"),
                width,
                heads,
                rng,
            )?,
            ffn_norm: LayerNorm::new(store, &format!("{name}.ffn_norm"), width)?,
            ffn: Mlp::new(
                store,
                &format!("{name}.ffn"),
                &[width, ffn_hidden, width],
                Activation::Relu,
                rng,
            )?,
        })
    }

    pub fn forward<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var) -> Result<Var> {
        let h = self.attention_norm.forward(tape, x)?;
        let h = self.attention.forward(tape, h)?;
        let x = tape.add(x, h)?;
        let h = self.ffn_norm.forward(tape, x)?;
        let h = self.ffn.forward(tape, h)?;
        tape.add(x, h)
    }
}

/// Analytic matmul FLOPs of one [`EncoderLayer`] over `rows` tokens.
pub fn encoder_layer_flops(rows: usize, width: usize, ffn_hidden: usize) -> u64 {
    let (r, d, f) = (rows as u64, width as u64, ffn_hidden as u64);
    // q, k, v, output projections + scores + weighted values + two ffn layers
    4 * 2 * r * d * d + 2 * 2 * r * r * d + 2 * 2 * r * d * f
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_mlp_outputs_zero() {
        let mut store = ParamStore::<f64>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mlp = Mlp::new(&mut store, "m", &[3, 4, 2], Activation::Relu, &mut rng).unwrap();
        for p in store.iter_mut() {
            p.value.scale_assign(0.0);
        }
        let mut t = Tape::new(&store);
        let x = t.constant(Matrix::filled(2, 3, 1.5));
        let y = mlp.forward(&mut t, x).unwrap();
        assert!(t.value(y).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut store = ParamStore::<f64>::new();
        let w = store.add("w", Matrix::identity(3)).unwrap();
        let b = store.add("b", Matrix::zeros(1, 3)).unwrap();
        let mlp = Mlp::from_params(&store, &[(w, b)], Activation::Relu).unwrap();
        let mut t = Tape::new(&store);
        let input = Matrix::from_rows(&[vec![1.0, -2.0, 3.0]]).unwrap();
        let x = t.constant(input.clone());
        let y = mlp.forward(&mut t, x).unwrap();
        assert_eq!(t.value(y), &input);
    }

    #[test]
    fn chain_mismatch_names_layer() {
        let mut store = ParamStore::<f64>::new();
        let w0 = store.add("l0.w", Matrix::zeros(3, 4)).unwrap();
        let b0 = store.add("l0.b", Matrix::zeros(1, 4)).unwrap();
        let w1 = store.add("l1.w", Matrix::zeros(5, 2)).unwrap();
        let b1 = store.add("l1.b", Matrix::zeros(1, 2)).unwrap();
        let err = Mlp::from_params(&store, &[(w0, b0), (w1, b1)], Activation::Relu).unwrap_err();
        assert!(err.to_string().contains("l1.w"), "{err}");
    }

    #[test]
    fn attention_rows_are_distributions() {
        let mut store = ParamStore::<f64>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mha = MultiHeadAttention::new(&mut store, "a", 4, 1, &mut rng).unwrap();
        for lin in [&mha.query, &mha.key, &mha.value, &mha.output] {
            store.get_mut(lin.weight).value = Matrix::identity(4);
        }
        let mut t = Tape::new(&store);
        let x = t.constant(Matrix::uniform(5, 4, 1.0, &mut rng));
        let (_, weights) = mha.forward_with_weights(&mut t, x).unwrap();
        let a = t.value(weights[0]);
        for r in 0..a.rows() {
            let s: f64 = a.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn heads_must_divide_width() {
        let mut store = ParamStore::<f32>::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(MultiHeadAttention::new(&mut store, "a", 6, 4, &mut rng).is_err());
    }
}
