use rand::seq::index;

use super::AttributedGraph;
use crate::{seed, Error, Result};

/// Structural (clique) and contextual (feature swap) anomaly injection settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InjectionSpec {
    pub clique_size: usize,
    pub clique_count: usize,
    pub contextual_count: usize,
    pub candidate_pool: usize,
}

impl InjectionSpec {
    pub const DEFAULT_CLIQUE_SIZE: usize = 15;
    pub const DEFAULT_CANDIDATE_POOL: usize = 50;

    /// Splits `total` anomalies evenly between structural and contextual,
    /// with structural anomalies rounded down to whole cliques.
    pub fn for_outliers(total: usize, clique_size: usize, candidate_pool: usize) -> Self {
        let clique_count = (total / 2) / clique_size.max(1);
        Self {
            clique_size,
            clique_count,
            contextual_count: total - clique_count * clique_size,
            candidate_pool,
        }
    }

    pub fn total(&self) -> usize {
        self.clique_size * self.clique_count + self.contextual_count
    }
}

/// Injects anomalies into an unlabeled graph and labels them.
///
/// Structural: `clique_count` disjoint groups of `clique_size` nodes become
/// fully connected. Contextual: each target copies the feature row, from the
/// original matrix, of whichever of `candidate_pool` uniformly drawn other
/// nodes lies farthest from it in Euclidean distance.
pub fn inject_anomalies(g: &AttributedGraph, spec: &InjectionSpec, seed: u64) -> Result<AttributedGraph> {
    if g.labels().is_some() {
        return Err(Error::InvalidArgument("graph already carries labels".into()));
    }
    let n = g.n();
    let total = spec.total();
    if total > n {
        return Err(Error::InvalidArgument(format!("{total} anomalies requested for {n} nodes")));
    }
    if spec.contextual_count > 0 && (n < 2 || spec.candidate_pool == 0) {
        return Err(Error::InvalidArgument("contextual injection needs another node and a non-empty pool".into()));
    }
    let mut rng = seed::stream(seed, "inject", 0);
    let chosen = index::sample(&mut rng, n, total).into_vec();
    let (structural, contextual) = chosen.split_at(spec.clique_size * spec.clique_count);

    let mut edges = g.edges().to_vec();
    for clique in structural.chunks(spec.clique_size.max(1)) {
        for (i, &u) in clique.iter().enumerate() {
            for &v in &clique[i + 1..] {
                edges.push((u, v));
            }
        }
    }

    let original = g.features();
    let mut features = original.clone();
    let pool = spec.candidate_pool.min(n - 1);
    for &target in contextual {
        let mut best = None;
        let mut best_dist = f64::NEG_INFINITY;
        for c in index::sample(&mut rng, n - 1, pool).into_iter() {
            let c = if c >= target { c + 1 } else { c };
            let dist: f64 = original
                .row(target)
                .iter()
                .zip(original.row(c))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist > best_dist {
                best_dist = dist;
                best = Some(c);
            }
        }
        let src = best.expect("candidate pool is non-empty");
        features.row_mut(target).assign(&original.row(src));
    }

    let mut labels = vec![0u8; n];
    for &v in &chosen {
        assert_eq!(labels[v], 0, "structural and contextual selections overlap");
        labels[v] = 1;
    }
    let (out, _) = AttributedGraph::new(features, edges, Some(labels))?;
    Ok(out)
}
