use ndarray::Array2;
use rand::Rng;

use super::{ParamId, ParamStore, Tape, Tensor2, Var};
use crate::Result;

/// Two affine layers with a ReLU in between: `relu(x·W1 + b1)·W2 + b2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mlp2 {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor2 {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl Mlp2 {
    /// Registers `{prefix}.w1`, `.b1`, `.w2`, `.b2` with Glorot-uniform weights and zero biases.
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        output: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let w1 = store.add(format!("{prefix}.w1"), glorot(input, hidden, rng))?;
        let b1 = store.add(format!("{prefix}.b1"), Array2::zeros((1, hidden)))?;
        let w2 = store.add(format!("{prefix}.w2"), glorot(hidden, output, rng))?;
        let b2 = store.add(format!("{prefix}.b2"), Array2::zeros((1, output)))?;
        Ok(Self { w1, b1, w2, b2 })
    }

    /// Looks the four tensors up by name in an existing store.
    pub fn bind(store: &ParamStore, prefix: &str) -> Option<Self> {
        Some(Self {
            w1: store.id(&format!("{prefix}.w1"))?,
            b1: store.id(&format!("{prefix}.b1"))?,
            w2: store.id(&format!("{prefix}.w2"))?,
            b2: store.id(&format!("{prefix}.b2"))?,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let w1 = tape.param(store, self.w1);
        let b1 = tape.param(store, self.b1);
        let w2 = tape.param(store, self.w2);
        let b2 = tape.param(store, self.b2);
        let h = tape.matmul(x, w1)?;
        let h = tape.add_bias(h, b1)?;
        let h = tape.relu(h);
        let o = tape.matmul(h, w2)?;
        tape.add_bias(o, b2)
    }

    /// Gradient-free evaluation.
    pub fn eval(&self, store: &ParamStore, x: &Tensor2) -> Tensor2 {
        let h = (x.dot(store.value(self.w1)) + store.value(self.b1)).mapv(|v| v.max(0.0));
        h.dot(store.value(self.w2)) + store.value(self.b2)
    }

    pub fn input_dim(&self, store: &ParamStore) -> usize {
        store.value(self.w1).nrows()
    }

    pub fn output_dim(&self, store: &ParamStore) -> usize {
        store.value(self.w2).ncols()
    }
}
