use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::diffmath::Tensor2;
use crate::{Error, Result};

/// Complete attributed graph: features, undirected edges, optional labels.
///
/// Edges are stored once each as `(u, v)` with `u < v`, sorted; the dense
/// adjacency is symmetric with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    features: Tensor2,
    edges: Vec<(usize, usize)>,
    labels: Option<Vec<u8>>,
}

/// Counts of edges dropped while canonicalizing an edge list.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeCleanup {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl EdgeCleanup {
    pub fn is_clean(&self) -> bool {
        self.self_loops == 0 && self.duplicates == 0
    }
}

pub(crate) fn canonical_edges(
    n: usize,
    raw: impl IntoIterator<Item = (usize, usize)>,
) -> Result<(Vec<(usize, usize)>, EdgeCleanup)> {
    let mut cleanup = EdgeCleanup::default();
    let mut edges = Vec::new();
    for (u, v) in raw {
        if u >= n || v >= n {
            return Err(Error::Dimension(format!("edge ({u}, {v}) has an endpoint >= node count {n}")));
        }
        if u == v {
            cleanup.self_loops += 1;
            continue;
        }
        edges.push((u.min(v), u.max(v)));
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    cleanup.duplicates = before - edges.len();
    Ok((edges, cleanup))
}

pub(crate) fn dense_adjacency(n: usize, edges: &[(usize, usize)]) -> Tensor2 {
    let mut a = Array2::zeros((n, n));
    for &(u, v) in edges {
        a[[u, v]] = 1.0;
        a[[v, u]] = 1.0;
    }
    a
}

impl AttributedGraph {
    /// Builds a graph, dropping self-loops and duplicate edges.
    pub fn new(
        features: Tensor2,
        edges: impl IntoIterator<Item = (usize, usize)>,
        labels: Option<Vec<u8>>,
    ) -> Result<(Self, EdgeCleanup)> {
        let n = features.nrows();
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite feature at row {}",
                pos / features.ncols().max(1)
            )));
        }
        let (edges, cleanup) = canonical_edges(n, edges)?;
        if let Some(l) = &labels {
            check_labels(l, n)?;
        }
        Ok((Self { features, edges, labels }, cleanup))
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Tensor2 {
        &self.features
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn outlier_count(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().filter(|&&x| x == 1).count())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn adjacency(&self) -> Tensor2 {
        dense_adjacency(self.n(), &self.edges)
    }

    pub fn with_labels(mut self, labels: Option<Vec<u8>>) -> Result<Self> {
        if let Some(l) = &labels {
            check_labels(l, self.n())?;
        }
        self.labels = labels;
        Ok(self)
    }

    /// SHA-256 over dimensions, feature bits, edges and labels (hex).
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update((self.d() as u64).to_le_bytes());
        for v in self.features.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update((self.edges.len() as u64).to_le_bytes());
        for &(u, v) in &self.edges {
            h.update((u as u64).to_le_bytes());
            h.update((v as u64).to_le_bytes());
        }
        match &self.labels {
            Some(l) => {
                h.update([1u8]);
                h.update(l);
            }
            None => h.update([0u8]),
        }
        hex::encode(h.finalize())
    }
}

fn check_labels(labels: &[u8], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} nodes", labels.len())));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_loops_and_duplicates_are_dropped() {
        let (g, c) = AttributedGraph::new(Array2::zeros((3, 1)), [(0, 0), (1, 0), (0, 1), (2, 1)], None).unwrap();
        assert_eq!(c, EdgeCleanup { self_loops: 1, duplicates: 1 });
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        let a = g.adjacency();
        assert_eq!(a, a.t());
        assert!((0..3).all(|i| a[[i, i]] == 0.0));
    }

    #[test]
    fn out_of_range_endpoint_is_fatal() {
        assert!(AttributedGraph::new(Array2::zeros((2, 1)), [(0, 2)], None).is_err());
        assert!(AttributedGraph::new(Array2::zeros((2, 1)), [], Some(vec![0])).is_err());
    }
}
