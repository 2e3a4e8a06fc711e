use ndarray::{Array2, Zip};

use super::ParamStore;
use crate::{Error, Result};

/// Adam moment accumulators for every parameter in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub first: Vec<Array2<f64>>,
    pub second: Vec<Array2<f64>>,
}

impl OptimizerState {
    pub fn new(params: &ParamStore, lr: f64) -> Self {
        let zeros = || params.ids().map(|id| Array2::zeros(params.value(id).dim())).collect::<Vec<_>>();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }
}

/// One bias-corrected Adam update; gradients are zeroed afterwards.
pub fn adam_step(params: &mut ParamStore, state: &mut OptimizerState) -> Result<()> {
    if state.first.len() != params.len() {
        return Err(Error::Shape(format!(
            "optimizer tracks {} parameters, store has {}",
            state.first.len(),
            params.len()
        )));
    }
    for id in params.ids() {
        if params.grad(id).iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient in parameter {}",
                params.name(id)
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.eps, state.lr);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for id in params.ids() {
        let k = id.index();
        let grad = params.grad(id).clone();
        let m = &mut state.first[k];
        let v = &mut state.second[k];
        Zip::from(&mut *m).and(&mut *v).and(&grad).for_each(|m, v, &g| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
        });
        Zip::from(params.value_mut(id)).and(&*m).and(&*v).for_each(|p, &m, &v| {
            let m_hat = m / c1;
            let v_hat = v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
    }
    params.zero_grad();
    Ok(())
}
