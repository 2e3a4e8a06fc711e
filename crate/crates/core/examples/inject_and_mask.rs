//! Writes a toy dataset with its manifest, injects anomalies, masks features
//! and edges, and saves the incomplete-graph bundle.
//!
//!     cargo run --release --example inject_and_mask -- [out_dir]
//!
//! The output directory can be fed to the `igad` binary afterwards.

use std::path::PathBuf;

use incomplete_gad::graphio::{
    apply_masks, community_graph, inject_anomalies, load_bundle, load_graph, make_masks, save_bundle, text,
    CommunitySpec, DatasetManifest, InjectionSpec, MaskMode,
};

fn main() -> incomplete_gad::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/toy".into()));
    let clean = community_graph(&CommunitySpec::default(), 11)?;

    // an unlabeled dataset on disk, as a benchmark without ground truth would ship
    let data = out.join("data");
    text::write_string(&data.join("features.txt"), &text::render_matrix(clean.features()))?;
    text::write_string(&data.join("edges.txt"), &text::render_edges(clean.edges()))?;
    let manifest_path = out.join("toy.manifest");
    text::write_string(
        &manifest_path,
        &format!(
            "name = toy\nfeatures = data/features.txt\nedges = data/edges.txt\nnodes = {}\nedge_count = {}\nfeature_dim = {}\noutliers = 12\n",
            clean.n(),
            clean.edge_count(),
            clean.d()
        ),
    )?;
    let manifest = DatasetManifest::load(&manifest_path)?;
    let graph = load_graph(&manifest)?;
    println!("{}: {} nodes, {} edges, {} features", manifest.name, graph.n(), graph.edge_count(), graph.d());

    let spec = InjectionSpec::for_outliers(manifest.outliers, 6, 30);
    let labeled = inject_anomalies(&graph, &spec, 11)?;
    println!(
        "injected {} cliques of {} plus {} contextual anomalies; {} edges now",
        spec.clique_count,
        spec.clique_size,
        spec.contextual_count,
        labeled.edge_count()
    );

    for mode in [MaskMode::RowWise, MaskMode::ElementWise] {
        let masks = make_masks(&labeled, 0.3, 0.3, mode, 11)?;
        let inc = apply_masks(&labeled, &masks)?;
        let hidden = masks.feature_mask.iter().filter(|&&m| m == 0.0).count();
        println!(
            "{mode}: {hidden} of {} feature entries hidden, {} of {} edges hidden",
            masks.feature_mask.len(),
            masks.masked_edges.len(),
            labeled.edge_count()
        );
        let dir = out.join(format!("bundle-{mode}"));
        save_bundle(&dir, &inc, labeled.labels())?;
        let back = load_bundle(&dir)?;
        assert_eq!(back.graph, inc);
        back.check_source(&labeled);
        println!("  saved and verified {}", dir.display());
    }
    Ok(())
}
