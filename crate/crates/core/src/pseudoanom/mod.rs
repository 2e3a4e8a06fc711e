//! Pseudo-anomalies decoded from the latent shell, their similarity subgraph,
//! and the block-diagonal augmented training graph.

use ndarray::{concatenate, s, Array2, Axis};
use rand::Rng;

use crate::diffmath::{ParamStore, Tensor2};
use crate::graphio::{rate_count, IncompleteGraph};
use crate::latentspace::{Decoder, PriorSpec};
use crate::{Error, Result};

pub use crate::latentspace::sample_shell_uniform;

pub const DEFAULT_TAU_A: f64 = 0.5;

/// `floor(η·n)`.
pub fn pseudo_count(eta: f64, n: usize) -> usize {
    rate_count(eta, n)
}

/// Decodes latent codes through the trained decoder, outside any tape.
pub fn decode_pseudo(decoder: &Decoder, store: &ParamStore, z_pseudo: &Tensor2) -> Tensor2 {
    decoder.eval(store, z_pseudo)
}

fn cosine_matrix(x: &Tensor2) -> Tensor2 {
    let norms: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let gram = x.dot(&x.t());
    Array2::from_shape_fn(gram.raw_dim(), |(i, j)| {
        if norms[i] == 0.0 || norms[j] == 0.0 {
            0.0
        } else {
            gram[(i, j)] / (norms[i] * norms[j])
        }
    })
}

/// Cosine similarities, min-max normalized per row over off-diagonal entries,
/// thresholded at `tau`, OR-symmetrized, zero diagonal. Rows whose off-diagonal
/// similarities are all equal emit no edges.
pub fn build_pseudo_adjacency(x_a: &Tensor2, tau: f64) -> Result<Tensor2> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("pseudo-anomaly threshold must lie in (0,1), got {tau}")));
    }
    let m = x_a.nrows();
    if m < 2 {
        log::warn!("{m} pseudo-anomalies: no similarity graph to build");
        return Ok(Array2::zeros((m, m)));
    }
    let directed = directed_edges(&cosine_matrix(x_a), tau);
    Ok(Array2::from_shape_fn((m, m), |(i, j)| {
        if directed[(i, j)] || directed[(j, i)] {
            1.0
        } else {
            0.0
        }
    }))
}

/// Normalized similarities this close below the threshold still count as reaching it.
const TIE_SLACK: f64 = 1e-12;

/// Row-wise min-max over off-diagonal similarities, thresholded at `tau`.
fn directed_edges(sim: &Tensor2, tau: f64) -> Array2<bool> {
    let m = sim.nrows();
    let mut out = Array2::from_elem((m, m), false);
    for i in 0..m {
        let off = (0..m).filter(|&j| j != i).map(|j| sim[(i, j)]);
        let (lo, hi) = off.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !(hi > lo) {
            continue;
        }
        for j in (0..m).filter(|&j| j != i) {
            out[(i, j)] = (sim[(i, j)] - lo) / (hi - lo) >= tau - TIE_SLACK;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudoAnomalyBatch {
    pub z_pseudo: Tensor2,
    pub x_a: Tensor2,
    pub a_a: Tensor2,
    pub tau_a: f64,
    pub eta: f64,
}

impl PseudoAnomalyBatch {
    /// Samples `floor(η·n)` shell codes, decodes them and links similar decodes.
    pub fn generate<R: Rng>(
        decoder: &Decoder,
        store: &ParamStore,
        n: usize,
        spec: &PriorSpec,
        eta: f64,
        tau_a: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("pseudo fraction must lie in [0,1], got {eta}")));
        }
        spec.validate()?;
        let m = pseudo_count(eta, n);
        let z_pseudo = sample_shell_uniform(m, spec, rng);
        let x_a = decode_pseudo(decoder, store, &z_pseudo);
        let a_a = build_pseudo_adjacency(&x_a, tau_a)?;
        Ok(Self {
            z_pseudo,
            x_a,
            a_a,
            tau_a,
            eta,
        })
    }

    pub fn len(&self) -> usize {
        self.x_a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real graph and pseudo-anomaly subgraph side by side with no cross edges.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedGraph {
    pub x_aug: Tensor2,
    pub mask_aug: Tensor2,
    /// Top-left block: the observed adjacency.
    pub a_real: Tensor2,
    /// Bottom-right block: the pseudo-anomaly adjacency.
    pub a_pseudo: Tensor2,
    pub real_count: usize,
    pub pseudo_count: usize,
}

impl AugmentedGraph {
    /// Dense `(n+M)×(n+M)` adjacency.
    pub fn a_aug(&self) -> Tensor2 {
        let (n, m) = (self.real_count, self.pseudo_count);
        let mut a = Array2::zeros((n + m, n + m));
        a.slice_mut(s![..n, ..n]).assign(&self.a_real);
        a.slice_mut(s![n.., n..]).assign(&self.a_pseudo);
        a
    }

    /// Features, mask and adjacency of the real nodes.
    pub fn real_part(&self) -> (Tensor2, Tensor2, Tensor2) {
        let n = self.real_count;
        (
            self.x_aug.slice(s![..n, ..]).to_owned(),
            self.mask_aug.slice(s![..n, ..]).to_owned(),
            self.a_real.clone(),
        )
    }
}

pub fn augment(inc: &IncompleteGraph, batch: &PseudoAnomalyBatch) -> Result<AugmentedGraph> {
    let m = batch.len();
    if batch.x_a.ncols() != inc.d() && m > 0 {
        return Err(Error::Dimension(format!(
            "pseudo-anomalies have {} features, graph has {}",
            batch.x_a.ncols(),
            inc.d()
        )));
    }
    if batch.a_a.dim() != (m, m) {
        return Err(Error::Dimension(format!("pseudo adjacency is {:?} for {m} nodes", batch.a_a.dim())));
    }
    let x_a = batch.x_a.view().into_shape_with_order((m, inc.d())).map_err(|e| Error::Shape(e.to_string()))?;
    let x_aug = concatenate(Axis(0), &[inc.x_obs.view(), x_a]).map_err(|e| Error::Shape(e.to_string()))?;
    let ones = Array2::ones((m, inc.d()));
    let mask_aug =
        concatenate(Axis(0), &[inc.feature_mask().view(), ones.view()]).map_err(|e| Error::Shape(e.to_string()))?;
    Ok(AugmentedGraph {
        x_aug,
        mask_aug,
        a_real: inc.adjacency(),
        a_pseudo: batch.a_a.clone(),
        real_count: inc.n(),
        pseudo_count: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn row_normalization_example() {
        let sim = array![[1.0, 0.2, 0.5, 0.8], [0.2, 1.0, 0.0, 0.0], [0.5, 0.0, 1.0, 0.0], [0.8, 0.0, 0.0, 1.0]];
        let d = directed_edges(&sim, 0.5);
        assert_eq!(d.row(0).to_vec(), vec![false, false, true, true]);
    }

    #[test]
    fn three_node_or_rule() {
        let sim = array![[1.0, 0.9, 0.1], [0.9, 1.0, 0.5], [0.1, 0.5, 1.0]];
        let d = directed_edges(&sim, 0.5);
        assert_eq!(d.row(0).to_vec(), vec![false, true, false]);
        // row 1: {0.9, 0.5} → {1, 0}; row 2: {0.1, 0.5} → {0, 1}
        assert_eq!(d.row(1).to_vec(), vec![true, false, false]);
        assert_eq!(d.row(2).to_vec(), vec![false, true, false]);
    }

    #[test]
    fn output_is_symmetric_binary_zero_diagonal() {
        use rand::Rng;
        let mut rng = crate::seed::rng(4);
        let x = Array2::from_shape_fn((9, 5), |_| rng.random_range(-1.0..1.0));
        let a = build_pseudo_adjacency(&x, 0.5).unwrap();
        assert_eq!(a, a.t());
        assert!(a.diag().iter().all(|&v| v == 0.0));
        assert!(a.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let x = Array2::from_elem((4, 3), 1.5);
        assert_eq!(build_pseudo_adjacency(&x, 0.5).unwrap(), Array2::<f64>::zeros((4, 4)));
    }

    #[test]
    fn fewer_than_two_nodes() {
        assert_eq!(build_pseudo_adjacency(&Array2::zeros((1, 3)), 0.5).unwrap().dim(), (1, 1));
        assert_eq!(build_pseudo_adjacency(&Array2::zeros((0, 3)), 0.5).unwrap().dim(), (0, 0));
        assert!(build_pseudo_adjacency(&Array2::zeros((3, 3)), 1.0).is_err());
    }

    #[test]
    fn zero_rows_have_cosine_zero() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let sim = cosine_matrix(&x);
        assert_eq!(sim.row(0).to_vec(), vec![0.0, 0.0, 0.0]);
    }
}
