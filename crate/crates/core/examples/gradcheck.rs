//! Finite-difference check of the full training-loss gradient on a small
//! random instance, for both stages.
//!
//!     cargo run --release --example gradcheck

use incomplete_gad::graphio::{apply_masks, community_graph, make_masks, CommunitySpec, MaskMode};
use incomplete_gad::pipeline::{finetune, gradcheck_stage, pretrain, ModelBundle, Stage, TrainConfig, TrainData};

fn main() -> incomplete_gad::Result<()> {
    let spec = CommunitySpec {
        nodes: 12,
        communities: 2,
        feature_dim: 6,
        p_in: 0.5,
        p_out: 0.1,
        ..Default::default()
    };
    let graph = community_graph(&spec, 4)?;
    let inc = apply_masks(&graph, &make_masks(&graph, 0.3, 0.3, MaskMode::ElementWise, 4)?)?;
    let cfg = TrainConfig {
        d_z: 4,
        lr: Some(1e-3),
        epochs_pre: 3,
        epochs_fine: 3,
        eta: 0.25,
        sinkhorn_iters: 200,
        master_seed: 4,
        ..Default::default()
    };

    let fresh = ModelBundle::init(inc.d(), &cfg, 1e-3)?;
    let r = gradcheck_stage(&fresh, &TrainData::real(&inc, &cfg)?, Stage::Pretrain, usize::MAX, 1e-5, 1e-4)?;
    println!("pretrain loss at init: {} probes, max rel err {:.3e}, passed {}", r.probes.len(), r.max_rel_err, r.passed);

    let tuned = finetune(pretrain(&inc, &cfg)?, &inc, &cfg)?;
    let batch = tuned.pseudo.as_ref().expect("eta > 0 yields pseudo-anomalies");
    let data = TrainData::augmented(&inc, batch, &cfg)?;
    let r = gradcheck_stage(&tuned, &data, Stage::Finetune, usize::MAX, 1e-5, 1e-4)?;
    println!("finetune loss after training: {} probes, max rel err {:.3e}, passed {}", r.probes.len(), r.max_rel_err, r.passed);
    Ok(())
}
