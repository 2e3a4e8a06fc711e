//! Joint latent space: GCN projection, radial priors, debiased Sinkhorn
//! divergence and the recovery decoder.

mod decoder;
mod gcn;
mod prior;
mod sinkhorn;
pub mod special;

pub use decoder::{recon_loss, Decoder};
pub use gcn::{normalize_adjacency, AdjacencyNorm, Projector};
pub use prior::{
    random_directions, sample_ball_prior, sample_shell_gaussian, sample_shell_uniform, shell_uniform_radius,
    truncated_chi_radius, PriorSpec,
};
pub use sinkhorn::{sinkhorn_divergence, sinkhorn_divergence_grad, sinkhorn_loss, ot_eps, SinkhornConfig};
