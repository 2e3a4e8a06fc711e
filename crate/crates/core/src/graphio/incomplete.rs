use super::graph::dense_adjacency;
use super::{AttributedGraph, ObservationMask};
use crate::diffmath::Tensor2;
use crate::{Error, Result};

/// Zero-filled observed features and edges plus the masks that produced them.
///
/// Labels are deliberately absent: the harness keeps them for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompleteGraph {
    pub x_obs: Tensor2,
    pub edges_obs: Vec<(usize, usize)>,
    pub masks: ObservationMask,
    pub source_hash: String,
}

impl IncompleteGraph {
    pub fn n(&self) -> usize {
        self.x_obs.nrows()
    }

    pub fn d(&self) -> usize {
        self.x_obs.ncols()
    }

    pub fn feature_mask(&self) -> &Tensor2 {
        &self.masks.feature_mask
    }

    pub fn adjacency(&self) -> Tensor2 {
        dense_adjacency(self.n(), &self.edges_obs)
    }
}

/// `X_obs = M_X ⊙ X`; masked edges are removed from both directions.
pub fn apply_masks(g: &AttributedGraph, m: &ObservationMask) -> Result<IncompleteGraph> {
    if m.feature_mask.dim() != g.features().dim() {
        return Err(Error::Dimension(format!(
            "feature mask {:?} vs features {:?}",
            m.feature_mask.dim(),
            g.features().dim()
        )));
    }
    for &(u, v) in &m.masked_edges {
        if !g.has_edge(u, v) {
            return Err(Error::Dimension(format!("masked edge ({u}, {v}) is not in the graph")));
        }
    }
    let x_obs = g.features() * &m.feature_mask;
    let edges_obs = g
        .edges()
        .iter()
        .copied()
        .filter(|e| m.masked_edges.binary_search(e).is_err())
        .collect();
    Ok(IncompleteGraph {
        x_obs,
        edges_obs,
        masks: m.clone(),
        source_hash: g.content_hash(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphio::{make_masks, MaskMode};
    use ndarray::{array, Array2};

    fn triangle() -> AttributedGraph {
        AttributedGraph::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [(0, 1), (1, 2), (0, 2)], None)
            .unwrap()
            .0
    }

    #[test]
    fn identity_mask_keeps_everything() {
        let g = triangle();
        let m = make_masks(&g, 0.0, 0.0, MaskMode::RowWise, 0).unwrap();
        let inc = apply_masks(&g, &m).unwrap();
        assert_eq!(&inc.x_obs, g.features());
        assert_eq!(inc.adjacency(), g.adjacency());
    }

    #[test]
    fn masked_row_and_edge_are_zeroed_symmetrically() {
        let g = triangle();
        let mut feature_mask = Array2::ones((3, 2));
        feature_mask.row_mut(1).fill(0.0);
        let m = ObservationMask {
            feature_mask,
            masked_edges: vec![(0, 2)],
            mode: MaskMode::RowWise,
            node_rate: 0.0,
            edge_rate: 0.0,
            seed: 0,
        };
        let inc = apply_masks(&g, &m).unwrap();
        assert!(inc.x_obs.row(1).iter().all(|&v| v == 0.0));
        let a = inc.adjacency();
        assert_eq!((a[[0, 2]], a[[2, 0]]), (0.0, 0.0));
        assert_eq!(a[[0, 1]], 1.0);
        assert_eq!(inc.feature_mask() * &inc.x_obs, inc.x_obs);
    }

    #[test]
    fn dimension_mismatch_is_fatal() {
        let g = triangle();
        let mut m = make_masks(&g, 0.0, 0.0, MaskMode::RowWise, 0).unwrap();
        m.feature_mask = Array2::ones((2, 2));
        assert!(apply_masks(&g, &m).is_err());
    }
}
