//! Ablation variants and a hyperparameter sweep through the experiment runner,
//! on a toy dataset written to a temporary directory.
//!
//!     cargo run --release --example ablation_sweep

use incomplete_gad::graphio::{community_graph, text, CommunitySpec, DatasetManifest, InjectionSpec};
use incomplete_gad::pipeline::{run_experiment, ExperimentSpec, Sweep, TrainConfig, Variant};

fn main() -> incomplete_gad::Result<()> {
    env_logger::init();
    let dir = std::env::temp_dir().join("igad-ablation-example");
    let g = community_graph(&CommunitySpec::default(), 9)?;
    text::write_string(&dir.join("features.txt"), &text::render_matrix(g.features()))?;
    text::write_string(&dir.join("edges.txt"), &text::render_edges(g.edges()))?;
    let manifest_path = dir.join("toy.manifest");
    text::write_string(
        &manifest_path,
        &format!(
            "name = toy\nfeatures = features.txt\nedges = edges.txt\nnodes = {}\nedge_count = {}\nfeature_dim = {}\noutliers = 12\n",
            g.n(),
            g.edge_count(),
            g.d()
        ),
    )?;

    let cfg = TrainConfig {
        d_z: 16,
        lr: Some(1e-3),
        epochs_pre: 10,
        epochs_fine: 10,
        sinkhorn_iters: 100,
        master_seed: 9,
        ..Default::default()
    };
    let mut spec = ExperimentSpec::new(DatasetManifest::load(&manifest_path)?, cfg);
    spec.injection = Some(InjectionSpec::for_outliers(12, 6, 30));
    spec.repeats = 2;
    spec.variants = vec![Variant::Full, Variant::NoPseudo, Variant::NoStructurePathway, Variant::MeanFill];
    let report = run_experiment(&spec, Some(&dir.join("ablation")))?;
    print!("{}", report.render_tsv());

    spec.variants = vec![Variant::Full];
    spec.sweep = Some(Sweep {
        key: "eta".into(),
        values: vec!["0.05".into(), "0.1".into(), "0.2".into()],
    });
    let report = run_experiment(&spec, Some(&dir.join("sweep")))?;
    print!("{}", report.render_tsv());
    println!("reports under {}", dir.display());
    Ok(())
}
