//! Reverse-mode differentiation over a linear trace of matrix operations.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! borrowed from a [`ParamStore`] rather than copied, so large weight
//! matrices cost nothing to reference. [`Tape::backward`] walks the trace
//! once in reverse and returns per-parameter [`Gradients`]; a trace can be
//! differentiated only once.

use std::collections::HashMap;

use super::matrix::{dot, Matrix, Real};
use super::param::{Gradients, ParamId, ParamStore};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Value<T: Real> {
    Owned(Matrix<T>),
    Param(ParamId),
}

enum Op<T: Real> {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddBias(Var, Var),
    Scale(Var, T),
    Relu(Var),
    Abs(Var),
    Transpose(Var),
    Softmax(Var),
    ScaleRows(Var, Var),
    GatherRows(Var, Vec<Option<usize>>),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    Reshape(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        normed: Matrix<T>,
        inv_std: Vec<T>,
    },
    CrossEntropy {
        logits: Var,
        gold: usize,
        probs: Vec<T>,
    },
    SumAll(Var),
}

struct Node<T: Real> {
    value: Value<T>,
    op: Op<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TapeState {
    Recording,
    Differentiated,
}

pub struct Tape<'p, T: Real = f32> {
    store: Option<&'p ParamStore<T>>,
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<ParamId, Var>,
    state: TapeState,
    matmul_flops: u64,
    track_signature: bool,
    signature: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

impl<'p, T: Real> Tape<'p, T> {
    /// A tape with no parameters; only constants can be recorded.
    pub fn detached() -> Self {
        Self::build(None)
    }

    pub fn new(store: &'p ParamStore<T>) -> Self {
        Self::build(Some(store))
    }

    fn build(store: Option<&'p ParamStore<T>>) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
            state: TapeState::Recording,
            matmul_flops: 0,
            track_signature: false,
            signature: FNV_OFFSET,
        }
    }

    /// Enables hashing of every discrete branch taken (ReLU signs, |x| signs,
    /// top-k selections) so callers can tell whether two forward passes went
    /// through the same piecewise-smooth region.
    pub fn track_signature(&mut self, on: bool) {
        self.track_signature = on;
    }

    pub fn signature(&self) -> u64 {
        self.signature
    }

    pub fn note_discrete(&mut self, values: impl IntoIterator<Item = u64>) {
        if self.track_signature {
            for v in values {
                self.mix(v);
            }
        }
    }

    fn mix(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.signature ^= u64::from(b);
            self.signature = self.signature.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn matmul_flops(&self) -> u64 {
        self.matmul_flops
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops the recorded trace so the tape can be reused.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.param_nodes.clear();
        self.state = TapeState::Recording;
        self.matmul_flops = 0;
        self.signature = FNV_OFFSET;
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        match &self.nodes[v.0].value {
            Value::Owned(m) => m,
            Value::Param(id) => self.store.expect("param node without store").value(*id),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v).get(0, 0)
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> Var {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, m: Matrix<T>) -> Var {
        self.push(m, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        assert!(self.store.is_some(), "tape has no parameter store");
        self.nodes.push(Node {
            value: Value::Param(id),
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let out = av.matmul(bv)?;
        self.matmul_flops += 2 * (av.rows() * av.cols() * bv.cols()) as u64;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::Dimension {
                op,
                left: sa,
                right: sb,
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let mut out = self.value(a).clone();
        for (o, &v) in out.as_mut_slice().iter_mut().zip(self.value(b).as_slice()) {
            *o -= v;
        }
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Adds a 1×c row to every row of an r×c matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xs, bs) = (self.shape(x), self.shape(bias));
        if bs != (1, xs.1) {
            return Err(Error::Dimension {
                op: "add_bias",
                left: xs,
                right: bs,
            });
        }
        let mut out = self.value(x).clone();
        let b = self.value(bias).as_slice().to_vec();
        for r in 0..xs.0 {
            for (o, &bv) in out.row_mut(r).iter_mut().zip(&b) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    pub fn scale(&mut self, x: Var, s: T) -> Var {
        let out = self.value(x).map(|v| v * s);
        self.push(out, Op::Scale(x, s))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| if v > T::zero() { v } else { T::zero() });
        if self.track_signature {
            let bits: Vec<u64> = out
                .as_slice()
                .chunks(64)
                .map(|c| {
                    c.iter()
                        .enumerate()
                        .fold(0u64, |acc, (i, &v)| acc | (u64::from(v > T::zero()) << i))
                })
                .collect();
            self.note_discrete(bits);
        }
        self.push(out, Op::Relu(x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| v.abs());
        if self.track_signature {
            let signs: Vec<u64> = self
                .value(x)
                .as_slice()
                .iter()
                .map(|&v| if v > T::zero() { 1 } else if v < T::zero() { 2 } else { 0 })
                .collect();
            self.note_discrete(signs);
        }
        self.push(out, Op::Abs(x))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let out = self.value(x).transpose();
        self.push(out, Op::Transpose(x))
    }

    /// Softmax over each row. `mask[j] == false` excludes column `j`
    /// (output exactly zero there). Max-subtracted for stability.
    pub fn row_softmax(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let xv = self.value(x);
        let (rows, cols) = xv.shape();
        if let Some(m) = mask {
            if m.len() != cols {
                return Err(Error::Dimension {
                    op: "row_softmax",
                    left: (rows, cols),
                    right: (1, m.len()),
                });
            }
        }
        let keep = |j: usize| mask.map_or(true, |m| m[j]);
        if cols == 0 || !(0..cols).any(keep) {
            return Err(Error::EmptySoftmax);
        }
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let row = xv.row(r);
            let max = (0..cols)
                .filter(|&j| keep(j))
                .map(|j| row[j])
                .fold(T::neg_infinity(), T::max);
            let o = out.row_mut(r);
            let mut total = T::zero();
            for j in (0..cols).filter(|&j| keep(j)) {
                let e = (row[j] - max).exp();
                o[j] = e;
                total += e;
            }
            for v in o.iter_mut() {
                *v = *v / total;
            }
        }
        Ok(self.push(out, Op::Softmax(x)))
    }

    /// Multiplies row `i` of `x` by entry `i` of the vector `s` (1×r or r×1).
    pub fn scale_rows(&mut self, x: Var, s: Var) -> Result<Var> {
        let (xs, ss) = (self.shape(x), self.shape(s));
        let len = if ss.0 == 1 { ss.1 } else { ss.0 };
        if (ss.0 != 1 && ss.1 != 1) || len != xs.0 {
            return Err(Error::Dimension {
                op: "scale_rows",
                left: xs,
                right: ss,
            });
        }
        let factors = self.value(s).as_slice().to_vec();
        let mut out = self.value(x).clone();
        for (r, &f) in factors.iter().enumerate() {
            for v in out.row_mut(r) {
                *v *= f;
            }
        }
        Ok(self.push(out, Op::ScaleRows(x, s)))
    }

    /// Builds a matrix from selected rows of `x`; `None` yields a zero row.
    pub fn gather_rows(&mut self, x: Var, index: &[Option<usize>]) -> Result<Var> {
        let xv = self.value(x);
        let (rows, cols) = xv.shape();
        let mut out = Matrix::zeros(index.len(), cols);
        for (o, idx) in index.iter().enumerate() {
            if let Some(i) = *idx {
                if i >= rows {
                    return Err(Error::InvalidArgument(format!(
                        "gather index {i} out of range for {rows} rows"
                    )));
                }
                out.row_mut(o).copy_from_slice(xv.row(i));
            }
        }
        Ok(self.push(out, Op::GatherRows(x, index.to_vec())))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.shape(parts[0]).0;
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.0 != rows {
                return Err(Error::Dimension {
                    op: "concat_cols",
                    left: self.shape(parts[0]),
                    right: s,
                });
            }
            total += s.1;
        }
        let mut out = Matrix::zeros(rows, total);
        let mut offset = 0;
        for &p in parts {
            let pv = self.value(p);
            let c = pv.cols();
            for r in 0..rows {
                out.row_mut(r)[offset..offset + c].copy_from_slice(pv.row(r));
            }
            offset += c;
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.shape(parts[0]).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let pv = self.value(p);
            if pv.cols() != cols {
                return Err(Error::Dimension {
                    op: "concat_rows",
                    left: self.shape(parts[0]),
                    right: pv.shape(),
                });
            }
            data.extend_from_slice(pv.as_slice());
            rows += pv.rows();
        }
        let out = Matrix::from_vec(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(parts.to_vec())))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        if start + len > xv.rows() {
            return Err(Error::Dimension {
                op: "slice_rows",
                left: xv.shape(),
                right: (start, len),
            });
        }
        let cols = xv.cols();
        let data = xv.as_slice()[start * cols..(start + len) * cols].to_vec();
        let out = Matrix::from_vec(len, cols, data)?;
        Ok(self.push(out, Op::SliceRows(x, start)))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        if start + len > xv.cols() {
            return Err(Error::Dimension {
                op: "slice_cols",
                left: xv.shape(),
                right: (start, len),
            });
        }
        let mut out = Matrix::zeros(xv.rows(), len);
        for r in 0..xv.rows() {
            out.row_mut(r).copy_from_slice(&xv.row(r)[start..start + len]);
        }
        Ok(self.push(out, Op::SliceCols(x, start)))
    }

    /// Row-major reshape (e.g. flattening to 1×n).
    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Result<Var> {
        let xv = self.value(x);
        if rows * cols != xv.len() {
            return Err(Error::Dimension {
                op: "reshape",
                left: xv.shape(),
                right: (rows, cols),
            });
        }
        let out = Matrix::from_vec(rows, cols, xv.as_slice().to_vec())?;
        Ok(self.push(out, Op::Reshape(x)))
    }

    /// Per-row layer normalisation with learned 1×c gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: T) -> Result<Var> {
        let xs = self.shape(x);
        for p in [gain, bias] {
            if self.shape(p) != (1, xs.1) {
                return Err(Error::Dimension {
                    op: "layer_norm",
                    left: xs,
                    right: self.shape(p),
                });
            }
        }
        let (rows, cols) = xs;
        let n = T::of(cols as f64);
        let xv = self.value(x);
        let mut normed = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        for r in 0..rows {
            let row = xv.row(r);
            let mean = row.iter().copied().sum::<T>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let is = T::one() / (var + eps).sqrt();
            for (o, &v) in normed.row_mut(r).iter_mut().zip(row) {
                *o = (v - mean) * is;
            }
            inv_std.push(is);
        }
        let g = self.value(gain).as_slice();
        let b = self.value(bias).as_slice();
        let mut out = normed.clone();
        for r in 0..rows {
            for ((o, &gv), &bv) in out.row_mut(r).iter_mut().zip(g).zip(b) {
                *o = *o * gv + bv;
            }
        }
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                normed,
                inv_std,
            },
        ))
    }

    /// `-log softmax(logits)[gold]` for a 1×C logit row.
    pub fn cross_entropy(&mut self, logits: Var, gold: usize) -> Result<Var> {
        let lv = self.value(logits);
        if lv.rows() != 1 {
            return Err(Error::Dimension {
                op: "cross_entropy",
                left: lv.shape(),
                right: (1, lv.cols()),
            });
        }
        if gold >= lv.cols() {
            return Err(Error::InvalidLabel(gold));
        }
        let row = lv.row(0);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let total: T = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + total.ln();
        let probs: Vec<T> = row.iter().map(|&v| (v - log_z).exp()).collect();
        let loss = log_z - row[gold];
        Ok(self.push(
            Matrix::scalar(loss),
            Op::CrossEntropy {
                logits,
                gold,
                probs,
            },
        ))
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Matrix::scalar(s), Op::SumAll(x))
    }

    /// Reverse sweep from a 1×1 `loss` node.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        if self.state == TapeState::Differentiated {
            return Err(Error::State(
                "backward already ran on this trace; reset the tape first".into(),
            ));
        }
        if self.shape(loss) != (1, 1) {
            return Err(Error::Dimension {
                op: "backward",
                left: self.shape(loss),
                right: (1, 1),
            });
        }
        self.state = TapeState::Differentiated;

        let mut out = Gradients::empty(self.store.map_or(0, ParamStore::len));
        let mut grads: Vec<Option<Matrix<T>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Matrix::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, g, &mut grads, &mut out)?;
        }
        Ok(out)
    }

    fn propagate(
        &self,
        i: usize,
        g: Matrix<T>,
        grads: &mut [Option<Matrix<T>>],
        out: &mut Gradients<T>,
    ) -> Result<()> {
        fn acc<T: Real>(grads: &mut [Option<Matrix<T>>], v: Var, g: Matrix<T>) {
            match &mut grads[v.0] {
                Some(a) => a.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Param(id) => match out.slot_mut(*id) {
                Some(a) => a.add_assign(&g),
                slot @ None => *slot = Some(g),
            },
            Op::MatMul(a, b) => {
                let ga = g.matmul_nt(self.value(*b))?;
                let gb = self.value(*a).matmul_tn(&g)?;
                acc(grads, *a, ga);
                acc(grads, *b, gb);
            }
            Op::Add(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, g);
            }
            Op::Sub(a, b) => {
                acc(grads, *b, g.map(|v| -v));
                acc(grads, *a, g);
            }
            Op::AddBias(x, bias) => {
                let mut gb = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, &v) in gb.as_mut_slice().iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
                acc(grads, *bias, gb);
                acc(grads, *x, g);
            }
            Op::Scale(x, s) => acc(grads, *x, g.map(|v| v * *s)),
            Op::Relu(x) => {
                let xv = self.value(*x);
                let mut gx = g;
                for (o, &v) in gx.as_mut_slice().iter_mut().zip(xv.as_slice()) {
                    if v <= T::zero() {
                        *o = T::zero();
                    }
                }
                acc(grads, *x, gx);
            }
            Op::Abs(x) => {
                let xv = self.value(*x);
                let mut gx = g;
                for (o, &v) in gx.as_mut_slice().iter_mut().zip(xv.as_slice()) {
                    *o = if v > T::zero() {
                        *o
                    } else if v < T::zero() {
                        -*o
                    } else {
                        T::zero()
                    };
                }
                acc(grads, *x, gx);
            }
            Op::Transpose(x) => acc(grads, *x, g.transpose()),
            Op::Softmax(x) => {
                let y = self.value(Var(i));
                let mut gx = Matrix::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = g.row(r);
                    let inner = dot(yr, gr);
                    for ((o, &yv), &gv) in gx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o = yv * (gv - inner);
                    }
                }
                acc(grads, *x, gx);
            }
            Op::ScaleRows(x, s) => {
                let xv = self.value(*x);
                let sv = self.value(*s);
                let factors = sv.as_slice();
                let mut gx = g.clone();
                let mut gs = Matrix::zeros(sv.rows(), sv.cols());
                for (r, &f) in factors.iter().enumerate() {
                    gs.as_mut_slice()[r] = dot(g.row(r), xv.row(r));
                    for v in gx.row_mut(r) {
                        *v *= f;
                    }
                }
                acc(grads, *x, gx);
                acc(grads, *s, gs);
            }
            Op::GatherRows(x, index) => {
                let (rows, cols) = self.shape(*x);
                let mut gx = Matrix::zeros(rows, cols);
                for (o, idx) in index.iter().enumerate() {
                    if let Some(src) = *idx {
                        for (a, &b) in gx.row_mut(src).iter_mut().zip(g.row(o)) {
                            *a += b;
                        }
                    }
                }
                acc(grads, *x, gx);
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (rows, c) = self.shape(p);
                    let mut gp = Matrix::zeros(rows, c);
                    for r in 0..rows {
                        gp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + c]);
                    }
                    offset += c;
                    acc(grads, p, gp);
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (r, c) = self.shape(p);
                    let data = g.as_slice()[offset * c..(offset + r) * c].to_vec();
                    offset += r;
                    acc(grads, p, Matrix::from_vec(r, c, data)?);
                }
            }
            Op::SliceRows(x, start) => {
                let (rows, cols) = self.shape(*x);
                let mut gx = Matrix::zeros(rows, cols);
                gx.as_mut_slice()[start * cols..(start + g.rows()) * cols]
                    .copy_from_slice(g.as_slice());
                acc(grads, *x, gx);
            }
            Op::SliceCols(x, start) => {
                let (rows, cols) = self.shape(*x);
                let mut gx = Matrix::zeros(rows, cols);
                for r in 0..rows {
                    gx.row_mut(r)[*start..start + g.cols()].copy_from_slice(g.row(r));
                }
                acc(grads, *x, gx);
            }
            Op::Reshape(x) => {
                let (rows, cols) = self.shape(*x);
                acc(grads, *x, Matrix::from_vec(rows, cols, g.into_vec())?);
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                normed,
                inv_std,
            } => {
                let (rows, cols) = normed.shape();
                let n = T::of(cols as f64);
                let gv = self.value(*gain).as_slice();
                let mut g_gain = Matrix::zeros(1, cols);
                let mut g_bias = Matrix::zeros(1, cols);
                let mut gx = Matrix::zeros(rows, cols);
                for r in 0..rows {
                    let gr = g.row(r);
                    let nr = normed.row(r);
                    let mut mean_d = T::zero();
                    let mut mean_dn = T::zero();
                    for c in 0..cols {
                        g_gain.as_mut_slice()[c] += gr[c] * nr[c];
                        g_bias.as_mut_slice()[c] += gr[c];
                        let d = gr[c] * gv[c];
                        mean_d += d;
                        mean_dn += d * nr[c];
                    }
                    mean_d = mean_d / n;
                    mean_dn = mean_dn / n;
                    let is = inv_std[r];
                    for (c, o) in gx.row_mut(r).iter_mut().enumerate() {
                        let d = gr[c] * gv[c];
                        *o = is * (d - mean_d - nr[c] * mean_dn);
                    }
                }
                acc(grads, *gain, g_gain);
                acc(grads, *bias, g_bias);
                acc(grads, *x, gx);
            }
            Op::CrossEntropy {
                logits,
                gold,
                probs,
            } => {
                let scale = g.get(0, 0);
                let gl: Vec<T> = probs
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| {
                        let target = if j == *gold { T::one() } else { T::zero() };
                        scale * (p - target)
                    })
                    .collect();
                acc(grads, *logits, Matrix::row_vector(&gl));
            }
            Op::SumAll(x) => {
                let (rows, cols) = self.shape(*x);
                acc(grads, *x, Matrix::filled(rows, cols, g.get(0, 0)));
            }
        }
        Ok(())
    }
}
