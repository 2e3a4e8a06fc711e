use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rand::Rng;

use crate::diffmath::{BlockDiagonal, ParamId, ParamStore, Tape, Tensor2, Var};
use crate::{Error, Result};

/// Adjacency preprocessing applied inside the projector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AdjacencyNorm {
    /// `D^{-1/2} Â D^{-1/2}`; rows with zero degree stay zero.
    #[default]
    Symmetric,
    /// `Â` as given.
    None,
}

impl fmt::Display for AdjacencyNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Symmetric => "symmetric",
            Self::None => "none",
        })
    }
}

impl FromStr for AdjacencyNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" | "sym" => Ok(Self::Symmetric),
            "none" | "raw" => Ok(Self::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown adjacency normalization {other:?} (expected symmetric or none)"
            ))),
        }
    }
}

pub fn normalize_adjacency(a: &Tensor2, mode: AdjacencyNorm) -> Tensor2 {
    match mode {
        AdjacencyNorm::None => a.clone(),
        AdjacencyNorm::Symmetric => {
            let inv: Vec<f64> = a
                .sum_axis(Axis(1))
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                .collect();
            Array2::from_shape_fn(a.raw_dim(), |(i, j)| inv[i] * a[(i, j)] * inv[j])
        }
    }
}

/// Two-layer GCN without biases: `Z = ReLU(Ã·ReLU(Ã·X̂·W1)·W2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Projector {
    pub w1: ParamId,
    pub w2: ParamId,
}

impl Projector {
    pub const PREFIX: &'static str = "projector";

    pub fn new<R: Rng>(store: &mut ParamStore, d: usize, d_z: usize, rng: &mut R) -> Result<Self> {
        let glorot = |rows: usize, cols: usize, rng: &mut R| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
        };
        let w1 = store.add(format!("{}.w1", Self::PREFIX), glorot(d, d_z, rng))?;
        let w2 = store.add(format!("{}.w2", Self::PREFIX), glorot(d_z, d_z, rng))?;
        Ok(Self { w1, w2 })
    }

    pub fn bind(store: &ParamStore) -> Option<Self> {
        Some(Self {
            w1: store.id(&format!("{}.w1", Self::PREFIX))?,
            w2: store.id(&format!("{}.w2", Self::PREFIX))?,
        })
    }

    pub fn latent_dim(&self, store: &ParamStore) -> usize {
        store.value(self.w2).ncols()
    }

    /// `a` must already be normalized; see [`normalize_adjacency`].
    pub fn project(&self, tape: &mut Tape, store: &ParamStore, x_hat: Var, a: &Rc<BlockDiagonal>) -> Result<Var> {
        let w1 = tape.param(store, self.w1);
        let w2 = tape.param(store, self.w2);
        let h = tape.propagate(a, x_hat)?;
        let h = tape.matmul(h, w1)?;
        let h = tape.relu(h);
        let h = tape.propagate(a, h)?;
        let h = tape.matmul(h, w2)?;
        Ok(tape.relu(h))
    }

    pub fn eval(&self, store: &ParamStore, x_hat: &Tensor2, a: &BlockDiagonal) -> Result<Tensor2> {
        let relu = |t: Tensor2| t.mapv(|v| v.max(0.0));
        let h = relu(a.apply(x_hat)?.dot(store.value(self.w1)));
        Ok(relu(a.apply(&h)?.dot(store.value(self.w2))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn symmetric_normalization_of_a_path() {
        let a = array![[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let n = normalize_adjacency(&a, AdjacencyNorm::Symmetric);
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(n, array![[0.0, h, 0.0], [h, 0.0, h], [0.0, h, 0.0]]);
        assert_eq!(normalize_adjacency(&Array2::zeros((2, 2)), AdjacencyNorm::Symmetric), Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn zero_weights_project_to_zero() {
        let mut store = ParamStore::new();
        let p = Projector::new(&mut store, 3, 5, &mut crate::seed::rng(1)).unwrap();
        store.value_mut(p.w1).fill(0.0);
        let a = BlockDiagonal::dense(Array2::eye(4)).unwrap();
        let z = p.eval(&store, &Array2::from_elem((4, 3), 2.0), &a).unwrap();
        assert_eq!(z, Array2::<f64>::zeros((4, 5)));
    }

    #[test]
    fn identity_propagation_passes_features_through() {
        let mut store = ParamStore::new();
        let p = Projector::new(&mut store, 3, 4, &mut crate::seed::rng(1)).unwrap();
        store.set(p.w1, Array2::eye(4).slice(ndarray::s![..3, ..]).to_owned()).unwrap();
        store.set(p.w2, Array2::eye(4)).unwrap();
        let x = array![[1.0, 2.0, 0.0], [0.5, 0.0, 3.0]];
        let a = BlockDiagonal::dense(Array2::eye(2)).unwrap();
        let z = p.eval(&store, &x, &a).unwrap();
        assert_eq!(z, array![[1.0, 2.0, 0.0, 0.0], [0.5, 0.0, 3.0, 0.0]]);
    }
}
