//! Planted-partition toy graphs for examples, tests and smoke runs.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::AttributedGraph;
use crate::{seed, Error, Result};

/// Stochastic block model with Gaussian features around per-community centroids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommunitySpec {
    pub nodes: usize,
    pub communities: usize,
    pub feature_dim: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Spread of node features around their centroid.
    pub noise: f64,
}

impl Default for CommunitySpec {
    fn default() -> Self {
        Self {
            nodes: 120,
            communities: 4,
            feature_dim: 16,
            p_in: 0.15,
            p_out: 0.005,
            noise: 0.3,
        }
    }
}

/// Unlabeled graph; node `i` belongs to community `i % communities`.
pub fn community_graph(spec: &CommunitySpec, seed_value: u64) -> Result<AttributedGraph> {
    if spec.communities == 0 || spec.nodes == 0 {
        return Err(Error::InvalidArgument("community graph needs nodes and communities".into()));
    }
    for p in [spec.p_in, spec.p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("edge probability {p} outside [0,1]")));
        }
    }
    let mut rng = seed::stream(seed_value, "community-graph", 0);
    let centroids: Array2<f64> = Array2::from_shape_fn((spec.communities, spec.feature_dim), |_| rng.sample(StandardNormal));
    let features = Array2::from_shape_fn((spec.nodes, spec.feature_dim), |(i, j)| {
        centroids[(i % spec.communities, j)] + spec.noise * rng.sample::<f64, _>(StandardNormal)
    });
    let mut edges = Vec::new();
    for u in 0..spec.nodes {
        for v in u + 1..spec.nodes {
            let p = if u % spec.communities == v % spec.communities { spec.p_in } else { spec.p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(AttributedGraph::new(features, edges, None)?.0)
}
