//! Pseudo-anomaly generation from the latent shell and block-diagonal
//! augmentation of an incomplete graph.
//!
//!     cargo run --release --example pseudo_anomalies

use incomplete_gad::diffmath::ParamStore;
use incomplete_gad::graphio::{apply_masks, community_graph, make_masks, CommunitySpec, MaskMode};
use incomplete_gad::latentspace::{Decoder, PriorSpec};
use incomplete_gad::pipeline::latent_norms;
use incomplete_gad::pseudoanom::{augment, PseudoAnomalyBatch, DEFAULT_TAU_A};
use incomplete_gad::seed;

fn main() -> incomplete_gad::Result<()> {
    let graph = community_graph(&CommunitySpec::default(), 2)?;
    let inc = apply_masks(&graph, &make_masks(&graph, 0.3, 0.3, MaskMode::RowWise, 2)?)?;
    let spec = PriorSpec::new(16, 4.0);
    let mut store = ParamStore::new();
    let decoder = Decoder::new(&mut store, spec.d_z, 32, inc.d(), &mut seed::stream(2, "init", 0))?;

    for tau in [0.3, DEFAULT_TAU_A, 0.9] {
        let batch =
            PseudoAnomalyBatch::generate(&decoder, &store, inc.n(), &spec, 0.1, tau, &mut seed::stream(2, "pseudo", 0))?;
        let edges = batch.a_a.iter().filter(|&&v| v != 0.0).count() / 2;
        println!("tau_a {tau}: {} pseudo nodes, {edges} pseudo edges", batch.len());
    }

    let batch =
        PseudoAnomalyBatch::generate(&decoder, &store, inc.n(), &spec, 0.1, DEFAULT_TAU_A, &mut seed::stream(2, "pseudo", 0))?;
    let norms = latent_norms(&batch.z_pseudo);
    println!(
        "latent codes in ({}, {}]: norms {:.4} .. {:.4}",
        spec.r_a,
        spec.r_b,
        norms.iter().copied().fold(f64::INFINITY, f64::min),
        norms.iter().copied().fold(0.0, f64::max)
    );

    let aug = augment(&inc, &batch)?;
    let a = aug.a_aug();
    let n = aug.real_count;
    let cross = a.slice(ndarray::s![..n, n..]).iter().chain(a.slice(ndarray::s![n.., ..n]).iter()).filter(|&&v| v != 0.0).count();
    println!(
        "augmented graph: {} x {} adjacency, {} features, {cross} cross-block entries",
        a.nrows(),
        a.ncols(),
        aug.x_aug.ncols()
    );
    Ok(())
}
