use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index;

use super::AttributedGraph;
use crate::diffmath::Tensor2;
use crate::{seed, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MaskMode {
    /// Whole feature rows are hidden (node-level missingness).
    #[default]
    RowWise,
    /// Individual feature entries are hidden.
    ElementWise,
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskMode::RowWise => "row-wise",
            MaskMode::ElementWise => "element-wise",
        })
    }
}

impl FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row-wise" | "row" => Ok(MaskMode::RowWise),
            "element-wise" | "element" => Ok(MaskMode::ElementWise),
            other => Err(Error::InvalidArgument(format!("unknown mask mode {other:?}"))),
        }
    }
}

/// Feature mask (1 = observed) plus the list of hidden edges.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMask {
    pub feature_mask: Tensor2,
    pub masked_edges: Vec<(usize, usize)>,
    pub mode: MaskMode,
    pub node_rate: f64,
    pub edge_rate: f64,
    pub seed: u64,
}

/// `floor(rate · count)`, tolerant of representation error in `rate`
/// (0.29 · 100 is 28.999… in binary).
pub fn rate_count(rate: f64, count: usize) -> usize {
    ((rate * count as f64) + 1e-9).floor() as usize
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {rate}")));
    }
    Ok(())
}

/// Draws feature and edge masks; a pure function of its arguments.
///
/// Feature and edge masking are independent processes: hiding a node's
/// features does not hide its edges.
pub fn make_masks(g: &AttributedGraph, node_rate: f64, edge_rate: f64, mode: MaskMode, seed: u64) -> Result<ObservationMask> {
    check_rate("node rate", node_rate)?;
    check_rate("edge rate", edge_rate)?;
    let (n, d) = (g.n(), g.d());
    let mut feature_mask = Array2::ones((n, d));
    let mut rng = seed::stream(seed, "feature-mask", 0);
    match mode {
        MaskMode::RowWise => {
            for i in index::sample(&mut rng, n, rate_count(node_rate, n)) {
                feature_mask.row_mut(i).fill(0.0);
            }
        }
        MaskMode::ElementWise => {
            let total = n * d;
            for k in index::sample(&mut rng, total, rate_count(node_rate, total)) {
                feature_mask[[k / d, k % d]] = 0.0;
            }
        }
    }
    let mut rng = seed::stream(seed, "edge-mask", 0);
    let edges = g.edges();
    let mut masked_edges: Vec<_> = index::sample(&mut rng, edges.len(), rate_count(edge_rate, edges.len()))
        .into_iter()
        .map(|k| edges[k])
        .collect();
    masked_edges.sort_unstable();
    Ok(ObservationMask {
        feature_mask,
        masked_edges,
        mode,
        node_rate,
        edge_rate,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize, d: usize) -> AttributedGraph {
        let x = Array2::from_shape_fn((n, d), |(i, j)| (i + j) as f64);
        AttributedGraph::new(x, (0..n).map(|i| (i, (i + 1) % n)), None).unwrap().0
    }

    #[test]
    fn zero_rates_are_identity() {
        let m = make_masks(&ring(10, 3), 0.0, 0.0, MaskMode::RowWise, 1).unwrap();
        assert!(m.feature_mask.iter().all(|&v| v == 1.0));
        assert!(m.masked_edges.is_empty());
    }

    #[test]
    fn full_row_rate_hides_everything() {
        let m = make_masks(&ring(10, 3), 1.0, 1.0, MaskMode::RowWise, 1).unwrap();
        assert!(m.feature_mask.iter().all(|&v| v == 0.0));
        assert_eq!(m.masked_edges.len(), 10);
    }

    #[test]
    fn floor_rule_counts() {
        let g = ring(124, 4);
        let m = make_masks(&g, 0.3, 0.3, MaskMode::RowWise, 5).unwrap();
        let hidden_rows = m.feature_mask.rows().into_iter().filter(|r| r.iter().all(|&v| v == 0.0)).count();
        assert_eq!(hidden_rows, 37);
        for r in m.feature_mask.rows() {
            assert!(r.iter().all(|&v| v == 0.0) || r.iter().all(|&v| v == 1.0));
        }
        assert_eq!(m.masked_edges.len(), 37);
        let e = make_masks(&g, 0.3, 0.0, MaskMode::ElementWise, 5).unwrap();
        assert_eq!(e.feature_mask.iter().filter(|&&v| v == 0.0).count(), rate_count(0.3, 124 * 4));
        assert_eq!(rate_count(0.29, 100), 29);
    }

    #[test]
    fn out_of_range_rate_is_rejected() {
        assert!(make_masks(&ring(4, 1), 1.5, 0.0, MaskMode::RowWise, 0).is_err());
        assert!(make_masks(&ring(4, 1), 0.0, -0.1, MaskMode::RowWise, 0).is_err());
    }
}
