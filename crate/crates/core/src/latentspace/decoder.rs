use std::rc::Rc;

use rand::Rng;

use crate::diffmath::{Mlp2, ParamStore, Tape, Tensor2, Var};
use crate::Result;

/// Recovery decoder `d_z → h → d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decoder {
    pub mlp: Mlp2,
}

impl Decoder {
    pub const PREFIX: &'static str = "decoder";

    pub fn new<R: Rng>(store: &mut ParamStore, d_z: usize, hidden: usize, d: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            mlp: Mlp2::new(store, Self::PREFIX, d_z, hidden, d, rng)?,
        })
    }

    pub fn bind(store: &ParamStore) -> Option<Self> {
        Mlp2::bind(store, Self::PREFIX).map(|mlp| Self { mlp })
    }

    pub fn decode(&self, tape: &mut Tape, store: &ParamStore, z: Var) -> Result<Var> {
        self.mlp.forward(tape, store, z)
    }

    pub fn eval(&self, store: &ParamStore, z: &Tensor2) -> Tensor2 {
        self.mlp.eval(store, z)
    }
}

/// Masked MSE of the reconstruction against the observed entries of `X_obs`.
pub fn recon_loss(tape: &mut Tape, x_tilde: Var, x_obs: &Rc<Tensor2>, mask: &Rc<Tensor2>) -> Result<Var> {
    tape.masked_mse(x_tilde, x_obs, mask)
}
