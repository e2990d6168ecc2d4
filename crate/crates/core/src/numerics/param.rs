use std::collections::HashMap;

use super::matrix::{Matrix, Real};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named trainable tensor with its accumulated gradient.
#[derive(Clone, Debug)]
pub struct Parameter<T: Real = f32> {
    pub name: String,
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
    pub trainable: bool,
}

/// Owns every parameter of a model, keyed by unique name.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T: Real = f32> {
    params: Vec<Parameter<T>>,
    by_name: HashMap<String, ParamId>,
    grads_ready: bool,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            params: Vec::new(),
            by_name: HashMap::new(),
            grads_ready: false,
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix<T>) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter name {name}"
            )));
        }
        let id = ParamId(self.params.len());
        let (r, c) = value.shape();
        self.params.push(Parameter {
            name: name.clone(),
            value,
            grad: Matrix::zeros(r, c),
            trainable: true,
        });
        self.by_name.insert(name, id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix<T> {
        &self.params[id.0].value
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter<T>> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter<T>)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    /// Total number of scalar entries.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Marks every parameter whose name starts with `prefix`.
    pub fn set_trainable_prefix(&mut self, prefix: &str, trainable: bool) {
        for p in &mut self.params {
            if p.name.starts_with(prefix) {
                p.trainable = trainable;
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.scale_assign(T::zero());
        }
        self.grads_ready = false;
    }

    /// Adds `scale * grads` into the stored gradients and marks them ready.
    pub fn accumulate(&mut self, grads: &Gradients<T>, scale: T) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::State(format!(
                "gradient set covers {} parameters, store holds {}",
                grads.len(),
                self.params.len()
            )));
        }
        for (p, g) in self.params.iter_mut().zip(grads.iter()) {
            if let Some(g) = g {
                for (a, &b) in p.grad.as_mut_slice().iter_mut().zip(g.as_slice()) {
                    *a += scale * b;
                }
            }
        }
        self.grads_ready = true;
        Ok(())
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub(crate) fn mark_consumed(&mut self) {
        self.grads_ready = false;
    }

    /// Copy of the store in another precision (gradients zeroed).
    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        let params = self
            .params
            .iter()
            .map(|p| Parameter {
                name: p.name.clone(),
                value: p.value.cast(),
                grad: Matrix::zeros(p.value.rows(), p.value.cols()),
                trainable: p.trainable,
            })
            .collect();
        ParamStore {
            params,
            by_name: self.by_name.clone(),
            grads_ready: false,
        }
    }

    /// Bitwise equality of names, shapes and values.
    pub fn same_values(&self, other: &Self) -> bool {
        self.params.len() == other.params.len()
            && self.params.iter().zip(&other.params).all(|(a, b)| {
                a.name == b.name
                    && a.value.shape() == b.value.shape()
                    && a.value
                        .as_slice()
                        .iter()
                        .zip(b.value.as_slice())
                        .all(|(x, y)| x.as_f64().to_bits() == y.as_f64().to_bits())
            })
    }
}

/// Per-parameter gradients produced by one backward pass.
///
/// `None` means the parameter was not reachable from the loss.
#[derive(Clone, Debug)]
pub struct Gradients<T: Real = f32> {
    grads: Vec<Option<Matrix<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn empty(num_params: usize) -> Self {
        Self {
            grads: vec![None; num_params],
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn get(&self, id: ParamId) -> Option<&Matrix<T>> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<&Matrix<T>>> {
        self.grads.iter().map(Option::as_ref)
    }

    /// Gradient for `id`, or zeros when unreachable.
    pub fn dense(&self, id: ParamId, shape: (usize, usize)) -> Matrix<T> {
        self.get(id)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(shape.0, shape.1))
    }

    pub(crate) fn slot_mut(&mut self, id: ParamId) -> &mut Option<Matrix<T>> {
        &mut self.grads[id.0]
    }

    /// `self += scale * other`, in parameter order.
    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            if let Some(b) = b {
                let mut b = b.clone();
                b.scale_assign(scale);
                match a {
                    Some(a) => a.add_assign(&b),
                    None => *a = Some(b),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut store = ParamStore::<f32>::new();
        store.add("w", Matrix::zeros(2, 2)).unwrap();
        assert!(store.add("w", Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn gradient_shape_matches_value() {
        let mut store = ParamStore::<f32>::new();
        let id = store.add("w", Matrix::zeros(3, 4)).unwrap();
        assert_eq!(store.get(id).grad.shape(), (3, 4));
    }
}
