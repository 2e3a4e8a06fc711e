//! Personalized PageRank densification of a sparse observed topology.
//!
//!     cargo run --release --example ppr_diffusion

use incomplete_gad::graphio::{community_graph, CommunitySpec};
use incomplete_gad::impute::{densify_structure, ppr_diffuse, surrogate_structure, DiffusionConfig, DiffusionNorm};

fn main() -> incomplete_gad::Result<()> {
    // a 5-node path: 0-1-2-3-4
    let mut a = ndarray::Array2::<f64>::zeros((5, 5));
    for i in 0..4 {
        a[[i, i + 1]] = 1.0;
        a[[i + 1, i]] = 1.0;
    }
    for beta in [0.3, 0.5, 0.85] {
        let (p, report) = ppr_diffuse(&a, &DiffusionConfig { beta, ..Default::default() })?;
        println!(
            "beta {beta}: {} iterations, converged {}, mass node 0 -> 4 = {:.5}",
            report.iterations, report.converged, p[[0, 4]]
        );
    }

    let (p, _) = ppr_diffuse(&a, &DiffusionConfig::default())?;
    let dense = densify_structure(&a, &p, None)?;
    let sparse = densify_structure(&a, &p, Some(1))?;
    let nnz = |m: &ndarray::Array2<f64>| m.iter().filter(|&&v| v != 0.0).count();
    println!("densified nonzeros: {} (all) vs {} (top-1 plus diagonal)", nnz(&dense), nnz(&sparse));

    // the literal unnormalized propagation diverges on any node of degree > 1/beta - 1
    let raw = DiffusionConfig {
        normalization: DiffusionNorm::None,
        max_iters: 50,
        ..Default::default()
    };
    let (_, report) = ppr_diffuse(&a, &raw)?;
    println!("unnormalized: {}", report.warning.as_deref().unwrap_or("converged"));

    let g = community_graph(&CommunitySpec::default(), 3)?;
    let (a_hat, report) = surrogate_structure(&g.adjacency(), &DiffusionConfig::default(), Some(16))?;
    println!(
        "community graph: {} edges -> {} surrogate entries after top-16 ({} iterations)",
        g.edge_count(),
        nnz(&a_hat),
        report.iterations
    );
    Ok(())
}
