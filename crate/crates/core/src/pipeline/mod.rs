//! Two-stage training, anomaly scoring, evaluation and experiment plumbing.

mod config;
mod experiment;
mod model;
mod score;
mod train;

pub use config::{TrainConfig, LR_CANDIDATES, LR_PROBE_EPOCHS};
pub use experiment::{
    prepare_graph, run_experiment, run_once, ExperimentReport, ExperimentSpec, ReportRow, RunArtifacts, Sweep, Variant,
};
pub use model::{EpochLoss, ModelBundle, Networks, Stage};
pub use score::{auroc, embed, latent_norms, mean_fill_baseline, rank_descending, score_nodes, ScoreReport};
pub use train::{
    finetune, finetune_with, forward_loss, gradcheck_stage, init_pretrain, pretrain, pretrain_with, probe_lr,
    resume_pretrain, TrainData,
};
