#![allow(dead_code)]

use incomplete_gad::diffmath::{Tape, Tensor2, Var};
use incomplete_gad::graphio::{apply_masks, community_graph, make_masks, CommunitySpec, IncompleteGraph, MaskMode};
use incomplete_gad::pipeline::TrainConfig;
use incomplete_gad::{seed, Result};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, seed_value: u64) -> Tensor2 {
    let mut rng = seed::rng(seed_value);
    Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, seed_value: u64) -> Tensor2 {
    let mut rng = seed::rng(seed_value);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

/// Gradients of `build` with respect to each input, compared against central
/// differences of the same closure. Returns the worst relative error over
/// entries whose absolute disagreement exceeds `abs_floor`.
pub fn fd_inputs<F>(inputs: &[Tensor2], h: f64, abs_floor: f64, build: F) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |xs: &[Tensor2]| -> Result<(f64, Vec<Tensor2>)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.input(x.clone())).collect();
        let loss = build(&mut tape, &vars)?;
        let mut store = incomplete_gad::diffmath::ParamStore::new();
        let grads = tape.backward(loss, &mut store)?;
        let g = vars
            .iter()
            .zip(xs)
            .map(|(&v, x)| grads.wrt(v).cloned().unwrap_or_else(|| Array2::zeros(x.dim())))
            .collect();
        Ok((tape.scalar(loss), g))
    };
    let (_, analytic) = eval(inputs)?;
    let mut worst: f64 = 0.0;
    let mut xs = inputs.to_vec();
    for k in 0..xs.len() {
        for idx in 0..xs[k].len() {
            let (r, c) = (idx / xs[k].ncols(), idx % xs[k].ncols());
            let orig = xs[k][[r, c]];
            xs[k][[r, c]] = orig + h;
            let up = eval(&xs)?.0;
            xs[k][[r, c]] = orig - h;
            let down = eval(&xs)?.0;
            xs[k][[r, c]] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[k][[r, c]];
            let diff = (a - numeric).abs();
            if diff > abs_floor {
                worst = worst.max(diff / a.abs().max(numeric.abs()));
            }
        }
    }
    Ok(worst)
}

/// Small planted-partition graph with masked features and edges.
pub fn toy_incomplete(nodes: usize, d: usize, seed_value: u64) -> IncompleteGraph {
    let spec = CommunitySpec {
        nodes,
        communities: 2,
        feature_dim: d,
        p_in: 0.5,
        p_out: 0.1,
        ..Default::default()
    };
    let g = community_graph(&spec, seed_value).unwrap();
    let m = make_masks(&g, 0.3, 0.3, MaskMode::ElementWise, seed_value).unwrap();
    apply_masks(&g, &m).unwrap()
}

pub fn small_config(d_z: usize, epochs_pre: usize, epochs_fine: usize) -> TrainConfig {
    TrainConfig {
        d_z,
        lr: Some(1e-3),
        epochs_pre,
        epochs_fine,
        sinkhorn_iters: 50,
        master_seed: 17,
        ..Default::default()
    }
}
