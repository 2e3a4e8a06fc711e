//! Unsupervised anomaly detection on attributed graphs whose node features
//! and edges are both partially missing.
//!
//! The pipeline imputes features with an MLP and densifies the observed
//! topology with personalized PageRank diffusion, projects the surrogate graph
//! through a two-layer GCN, and shapes the latent cloud with a debiased
//! Sinkhorn divergence towards a truncated Gaussian on a ball. A second stage
//! decodes latent codes drawn from an annular shell into pseudo-anomaly
//! subgraphs and fine-tunes on the augmented graph. Nodes are scored by the
//! norm of their latent embedding.
//!
//! Module map:
//!
//! - [`graphio`]: attributed graphs, anomaly injection, missingness masks, bundles
//! - [`diffmath`]: dense kernels, reverse-mode tape, Adam, gradient checking
//! - [`impute`]: feature imputer and PPR structure diffusion
//! - [`latentspace`]: GCN projector, radial prior samplers, Sinkhorn divergence, decoder
//! - [`pseudoanom`]: shell sampling, pseudo-anomaly subgraphs, block-diagonal augmentation
//! - [`pipeline`]: training stages, scoring, AUROC, experiment runner

pub mod diffmath;
pub mod graphio;
pub mod impute;
pub mod latentspace;
pub mod pipeline;
pub mod pseudoanom;
pub mod seed;

mod error;

pub use error::{Error, Result};
