use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

/// A named parameter with its gradient accumulator and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    pub m: Matrix,
    pub v: Matrix,
}

impl Param {
    fn new(name: String, value: Matrix) -> Self {
        let (r, c) = value.shape();
        Self {
            name,
            value,
            grad: Matrix::zeros(r, c),
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
        }
    }
}

/// Ordered collection of named parameters plus the optimizer step counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        assert!(
            self.find(&name).is_none(),
            "duplicate parameter name `{name}`"
        );
        self.params.push(Param::new(name, value));
        ParamId(self.params.len() - 1)
    }

    /// Rebuilds a store from serialized parts, checking shape agreement.
    pub fn from_parts(params: Vec<Param>, step: u64) -> Result<Self> {
        for p in &params {
            for (what, t) in [("grad", &p.grad), ("m", &p.m), ("v", &p.v)] {
                if t.shape() != p.value.shape() {
                    return Err(Error::Dimension {
                        op: what,
                        lhs: p.value.shape(),
                        rhs: t.shape(),
                    });
                }
            }
            if p.v.as_slice().iter().any(|&x| x < 0.0) {
                return Err(Error::contract(format!(
                    "negative second moment in `{}`",
                    p.name
                )));
            }
        }
        Ok(Self { params, step })
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn bump_step(&mut self) {
        self.step += 1;
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.params[id.0].grad
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Zeroed gradient scratch space shaped like this store.
    pub fn grad_buffer(&self) -> GradBuffer {
        GradBuffer {
            grads: self.params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
        }
    }

    /// `grad += scale * buffer` for every parameter.
    pub fn accumulate(&mut self, buffer: &GradBuffer, scale: f64) {
        assert_eq!(buffer.grads.len(), self.params.len());
        for (p, g) in self.params.iter_mut().zip(&buffer.grads) {
            for (dst, src) in p.grad.as_mut_slice().iter_mut().zip(g) {
                *dst += scale * src;
            }
        }
    }
}

/// Gradient scratch aligned with a [`ParamStore`], filled by backward passes.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    grads: Vec<Vec<f64>>,
}

impl GradBuffer {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.grads[id.0]
    }

    pub fn clear(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}
