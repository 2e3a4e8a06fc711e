use std::rc::Rc;

use rand::Rng;

use crate::diffmath::{Mlp2, ParamStore, Tape, Tensor2, Var};
use crate::Result;

/// Graph-agnostic feature imputer `d → h → d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureImputer {
    pub mlp: Mlp2,
}

impl FeatureImputer {
    pub const PREFIX: &'static str = "imputer";

    pub fn new<R: Rng>(store: &mut ParamStore, d: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            mlp: Mlp2::new(store, Self::PREFIX, d, hidden, d, rng)?,
        })
    }

    pub fn bind(store: &ParamStore) -> Option<Self> {
        Mlp2::bind(store, Self::PREFIX).map(|mlp| Self { mlp })
    }

    /// `X̂ = f(X_obs)`, recorded on the tape.
    pub fn impute(&self, tape: &mut Tape, store: &ParamStore, x_obs: Var) -> Result<Var> {
        self.mlp.forward(tape, store, x_obs)
    }

    pub fn eval(&self, store: &ParamStore, x_obs: &Tensor2) -> Tensor2 {
        self.mlp.eval(store, x_obs)
    }
}

/// Masked MSE of the imputation against the observed entries of `X_obs`.
pub fn feature_loss(tape: &mut Tape, x_hat: Var, x_obs: &Rc<Tensor2>, mask: &Rc<Tensor2>) -> Result<Var> {
    tape.masked_mse(x_hat, x_obs, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmath::{adam_step, masked_mse, OptimizerState};
    use ndarray::{array, Array2};

    #[test]
    fn zero_weights_emit_the_bias() {
        let mut store = ParamStore::new();
        let imp = FeatureImputer::new(&mut store, 3, 4, &mut crate::seed::rng(0)).unwrap();
        for id in [imp.mlp.w1, imp.mlp.w2] {
            store.value_mut(id).fill(0.0);
        }
        store.set(imp.mlp.b1, array![[1.0, -1.0, 2.0, 0.0]]).unwrap();
        store.set(imp.mlp.b2, array![[0.5, -0.5, 3.0]]).unwrap();
        let out = imp.eval(&store, &Array2::from_elem((4, 3), 7.0));
        for row in out.rows() {
            assert_eq!(row.to_vec(), vec![0.5, -0.5, 3.0]);
        }
    }

    #[test]
    fn fits_a_rank_one_matrix_on_observed_entries() {
        let u = [1.0, -0.5, 0.8, 0.3, -1.2, 0.6, 0.9, -0.7, 0.2, 1.1];
        let v = [0.7, -0.4, 1.0, 0.5];
        let x = Array2::from_shape_fn((10, 4), |(i, j)| u[i] * v[j]);
        let mut mask = Array2::ones((10, 4));
        for i in [2, 7] {
            mask.row_mut(i).fill(0.0);
        }
        let x_obs = Rc::new(&x * &mask);
        let mask = Rc::new(mask);
        let mut store = ParamStore::new();
        let imp = FeatureImputer::new(&mut store, 4, 16, &mut crate::seed::rng(3)).unwrap();
        let mut opt = OptimizerState::new(&store, 1e-2);
        for _ in 0..1500 {
            let mut tape = Tape::new();
            let xv = tape.input((*x_obs).clone());
            let xh = imp.impute(&mut tape, &store, xv).unwrap();
            let l = feature_loss(&mut tape, xh, &x_obs, &mask).unwrap();
            tape.backward(l, &mut store).unwrap();
            adam_step(&mut store, &mut opt).unwrap();
        }
        let fitted = imp.eval(&store, &x_obs);
        assert!(masked_mse(&fitted, &x_obs, &mask).unwrap() < 0.01);
    }
}
