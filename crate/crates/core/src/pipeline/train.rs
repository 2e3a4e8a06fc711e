use std::rc::Rc;

use ndarray::Array2;

use crate::diffmath::{adam_step, grad_check, BlockDiagonal, GradCheckReport, ParamStore, Tape, Tensor2, Var};
use crate::graphio::IncompleteGraph;
use crate::impute::{feature_loss, surrogate_structure, DiffusionReport};
use crate::latentspace::{normalize_adjacency, recon_loss, sample_ball_prior, sample_shell_gaussian, sinkhorn_loss};
use crate::pseudoanom::{augment, PseudoAnomalyBatch};
use crate::{Error, Result};

use super::model::{EpochLoss, ModelBundle, Networks, Stage};
use super::{TrainConfig, LR_CANDIDATES, LR_PROBE_EPOCHS};

/// `Â` for one diagonal block, normalized for the projector.
fn propagation_block(a: &Tensor2, cfg: &TrainConfig) -> Result<(Tensor2, Option<DiffusionReport>)> {
    let (a_hat, report) = if cfg.no_structure_pathway {
        (a + &Array2::<f64>::eye(a.nrows()), None)
    } else {
        let (a_hat, report) = surrogate_structure(a, &cfg.diffusion(), cfg.top_k)?;
        (a_hat, Some(report))
    };
    Ok((normalize_adjacency(&a_hat, cfg.gcn_norm), report))
}

/// Fixed inputs of one training stage.
pub struct TrainData {
    pub x_in: Rc<Tensor2>,
    pub mask: Rc<Tensor2>,
    pub propagation: Rc<BlockDiagonal>,
    pub real: usize,
    pub pseudo: usize,
    pub diffusion: Option<DiffusionReport>,
}

impl TrainData {
    pub fn real(inc: &IncompleteGraph, cfg: &TrainConfig) -> Result<Self> {
        let (block, diffusion) = propagation_block(&inc.adjacency(), cfg)?;
        Ok(Self {
            x_in: Rc::new(inc.x_obs.clone()),
            mask: Rc::new(inc.feature_mask().clone()),
            propagation: Rc::new(BlockDiagonal::dense(block)?),
            real: inc.n(),
            pseudo: 0,
            diffusion,
        })
    }

    /// Block-diagonal augmented graph; each block is densified on its own,
    /// which is what diffusing the whole block-diagonal matrix amounts to.
    pub fn augmented(inc: &IncompleteGraph, batch: &PseudoAnomalyBatch, cfg: &TrainConfig) -> Result<Self> {
        let aug = augment(inc, batch)?;
        let (real_block, diffusion) = propagation_block(&aug.a_real, cfg)?;
        let mut blocks = vec![real_block];
        if aug.pseudo_count > 0 {
            blocks.push(propagation_block(&aug.a_pseudo, cfg)?.0);
        }
        Ok(Self {
            x_in: Rc::new(aug.x_aug),
            mask: Rc::new(aug.mask_aug),
            propagation: Rc::new(BlockDiagonal::new(blocks)?),
            real: aug.real_count,
            pseudo: aug.pseudo_count,
            diffusion,
        })
    }
}

/// Records the full stage loss for global epoch `epoch` on `tape`.
pub fn forward_loss(
    tape: &mut Tape,
    store: &ParamStore,
    nets: &Networks,
    data: &TrainData,
    cfg: &TrainConfig,
    stage: Stage,
    epoch: usize,
) -> Result<(Var, EpochLoss)> {
    let sinkhorn = cfg.sinkhorn();
    let prior = cfg.prior();
    let x = tape.input((*data.x_in).clone());
    let x_hat = if cfg.no_feature_pathway {
        x
    } else {
        nets.imputer.impute(tape, store, x)?
    };
    let z = nets.projector.project(tape, store, x_hat, &data.propagation)?;
    let z_real = if data.pseudo == 0 { z } else { tape.slice_rows(z, 0, data.real)? };

    let ball = Rc::new(sample_ball_prior(
        data.real,
        &prior,
        &mut crate::seed::stream(cfg.master_seed, "prior", epoch as u64),
    ));
    let dist = sinkhorn_loss(tape, z_real, &ball, &sinkhorn)?;
    let mut total = dist;
    let mut loss = EpochLoss {
        stage,
        total: 0.0,
        dist: tape.scalar(dist),
        shell: 0.0,
        feat: 0.0,
        recon: 0.0,
    };
    if data.pseudo > 0 {
        let z_pseudo = tape.slice_rows(z, data.real, data.real + data.pseudo)?;
        let target = Rc::new(sample_shell_gaussian(
            data.pseudo,
            &prior,
            &mut crate::seed::stream(cfg.master_seed, "shell-prior", epoch as u64),
        ));
        let shell = sinkhorn_loss(tape, z_pseudo, &target, &sinkhorn)?;
        loss.shell = tape.scalar(shell);
        total = tape.add(total, shell)?;
    }
    if !cfg.no_feature_pathway {
        let feat = feature_loss(tape, x_hat, &data.x_in, &data.mask)?;
        loss.feat = tape.scalar(feat);
        if cfg.feat_weight() != 0.0 {
            let w = tape.scale(feat, cfg.feat_weight());
            total = tape.add(total, w)?;
        }
    }
    let x_tilde = nets.decoder.decode(tape, store, z)?;
    let recon = recon_loss(tape, x_tilde, &data.x_in, &data.mask)?;
    loss.recon = tape.scalar(recon);
    if cfg.recon_weight() != 0.0 {
        let w = tape.scale(recon, cfg.recon_weight());
        total = tape.add(total, w)?;
    }
    loss.total = tape.scalar(total);
    Ok((total, loss))
}

fn run_epochs<F>(
    bundle: &mut ModelBundle,
    data: &TrainData,
    stage: Stage,
    target: usize,
    after_epoch: &mut F,
) -> Result<()>
where
    F: FnMut(&ModelBundle) -> Result<()>,
{
    let nets = bundle.networks()?;
    while bundle.epochs_in(stage) < target {
        let epoch = bundle.history.len();
        let mut tape = Tape::new();
        let (total, loss) = forward_loss(&mut tape, &bundle.store, &nets, data, &bundle.config, stage, epoch)?;
        if !loss.total.is_finite() {
            return Err(Error::Numerical(format!("{stage} loss is {} at epoch {epoch}", loss.total)));
        }
        bundle.store.zero_grad();
        tape.backward(total, &mut bundle.store)?;
        adam_step(&mut bundle.store, &mut bundle.optimizer)
            .map_err(|e| Error::Numerical(format!("{stage} epoch {epoch}: {e}")))?;
        bundle.history.push(loss);
        log::debug!("{stage} epoch {epoch}: {loss:?}");
        after_epoch(bundle)?;
    }
    Ok(())
}

/// Picks the candidate learning rate with the lowest loss after a short run.
pub fn probe_lr(inc: &IncompleteGraph, cfg: &TrainConfig) -> Result<(f64, Vec<(f64, f64)>)> {
    let data = TrainData::real(inc, cfg)?;
    let epochs = LR_PROBE_EPOCHS.min(cfg.epochs_pre);
    let mut results = Vec::new();
    for lr in LR_CANDIDATES {
        let mut bundle = ModelBundle::init(inc.d(), cfg, lr)?;
        let loss = match run_epochs(&mut bundle, &data, Stage::Pretrain, epochs, &mut |_| Ok(())) {
            Ok(()) => bundle.history.last().map_or(f64::INFINITY, |h| h.total),
            Err(Error::Numerical(m)) => {
                log::warn!("lr probe {lr}: {m}");
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        results.push((lr, loss));
    }
    let best = results
        .iter()
        .filter(|(_, l)| l.is_finite())
        .fold(None::<(f64, f64)>, |best, &(lr, l)| match best {
            Some((_, bl)) if bl <= l => best,
            _ => Some((lr, l)),
        })
        .ok_or_else(|| Error::Numerical("every learning-rate candidate diverged".into()))?;
    log::info!("lr probe picked {} from {results:?}", best.0);
    Ok((best.0, results))
}

/// Fresh model and stage data for pretraining, running the lr probe if needed.
pub fn init_pretrain(inc: &IncompleteGraph, cfg: &TrainConfig) -> Result<ModelBundle> {
    cfg.validate()?;
    let (lr, probe) = match cfg.lr {
        Some(lr) => (lr, Vec::new()),
        None => probe_lr(inc, cfg)?,
    };
    let mut bundle = ModelBundle::init(inc.d(), cfg, lr)?;
    bundle.lr_probe = probe;
    Ok(bundle)
}

fn check_features(bundle: &ModelBundle, inc: &IncompleteGraph) -> Result<()> {
    let d = bundle.feature_dim()?;
    if d != inc.d() {
        return Err(Error::Dimension(format!("model expects {d} features, graph has {}", inc.d())));
    }
    Ok(())
}

/// Runs pretraining from scratch.
pub fn pretrain(inc: &IncompleteGraph, cfg: &TrainConfig) -> Result<ModelBundle> {
    pretrain_with(inc, cfg, |_| Ok(()))
}

/// [`pretrain`] with a callback after every epoch (e.g. for checkpointing).
pub fn pretrain_with<F>(inc: &IncompleteGraph, cfg: &TrainConfig, after_epoch: F) -> Result<ModelBundle>
where
    F: FnMut(&ModelBundle) -> Result<()>,
{
    let bundle = init_pretrain(inc, cfg)?;
    resume_pretrain(bundle, inc, after_epoch)
}

/// Continues pretraining until `epochs_pre` pretraining epochs are recorded.
pub fn resume_pretrain<F>(mut bundle: ModelBundle, inc: &IncompleteGraph, mut after_epoch: F) -> Result<ModelBundle>
where
    F: FnMut(&ModelBundle) -> Result<()>,
{
    check_features(&bundle, inc)?;
    let data = TrainData::real(inc, &bundle.config)?;
    bundle.diffusion = data.diffusion.clone();
    let target = bundle.config.epochs_pre;
    run_epochs(&mut bundle, &data, Stage::Pretrain, target, &mut after_epoch)?;
    Ok(bundle)
}

/// Generates pseudo-anomalies (first call only) and fine-tunes on the augmented graph.
pub fn finetune(bundle: ModelBundle, inc: &IncompleteGraph, cfg: &TrainConfig) -> Result<ModelBundle> {
    finetune_with(bundle, inc, cfg, |_| Ok(()))
}

pub fn finetune_with<F>(
    mut bundle: ModelBundle,
    inc: &IncompleteGraph,
    cfg: &TrainConfig,
    mut after_epoch: F,
) -> Result<ModelBundle>
where
    F: FnMut(&ModelBundle) -> Result<()>,
{
    cfg.validate()?;
    check_features(&bundle, inc)?;
    if bundle.epochs_in(Stage::Pretrain) == 0 {
        return Err(Error::InvalidArgument("fine-tuning needs a pretrained model".into()));
    }
    bundle.config = cfg.clone();
    if bundle.pseudo.is_none() && !cfg.no_pseudo {
        let nets = bundle.networks()?;
        let batch = PseudoAnomalyBatch::generate(
            &nets.decoder,
            &bundle.store,
            inc.n(),
            &cfg.prior(),
            cfg.eta,
            cfg.tau_a,
            &mut crate::seed::stream(cfg.master_seed, "pseudo", 0),
        )?;
        log::info!("generated {} pseudo-anomalies", batch.len());
        bundle.pseudo = Some(batch);
    }
    let data = match (&bundle.pseudo, cfg.no_pseudo) {
        (Some(batch), false) => TrainData::augmented(inc, batch, cfg)?,
        _ => TrainData::real(inc, cfg)?,
    };
    bundle.diffusion = data.diffusion.clone();
    run_epochs(&mut bundle, &data, Stage::Finetune, cfg.epochs_fine, &mut after_epoch)?;
    Ok(bundle)
}

/// Central-difference check of the gradient of the stage loss at the bundle's
/// current parameters, using the prior draw of the next epoch.
pub fn gradcheck_stage(
    bundle: &ModelBundle,
    data: &TrainData,
    stage: Stage,
    probes: usize,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let nets = bundle.networks()?;
    let cfg = bundle.config.clone();
    let epoch = bundle.history.len();
    let mut store = bundle.store.clone();
    grad_check(
        |s: &mut ParamStore| {
            let mut tape = Tape::new();
            let (total, _) = forward_loss(&mut tape, s, &nets, data, &cfg, stage, epoch)?;
            tape.backward(total, s)?;
            Ok(tape.scalar(total))
        },
        &mut store,
        probes,
        h,
        tol,
        cfg.master_seed,
    )
}
