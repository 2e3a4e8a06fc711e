//! The two independent imputation pathways: an MLP that reconstructs node
//! features without looking at the graph, and deterministic personalized
//! PageRank diffusion that densifies the observed topology.

mod feature;
mod ppr;

pub use feature::{feature_loss, FeatureImputer};
pub use ppr::{
    densify_structure, ppr_diffuse, surrogate_structure, symmetrize, DiffusionConfig, DiffusionNorm,
    DiffusionReport, SurrogateGraph,
};
