use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::diffmath::Tensor2;
use crate::graphio::{
    apply_masks, inject_anomalies, kv, load_graph, make_masks, text, AttributedGraph, DatasetManifest, IncompleteGraph,
    InjectionSpec, MaskMode,
};
use crate::{seed, Error, Result};

use super::model::ModelBundle;
use super::score::{embed, latent_norms, mean_fill_baseline, ScoreReport};
use super::{finetune, pretrain, TrainConfig};

/// Model variants compared in ablation runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Full,
    NoFeatLoss,
    NoReconLoss,
    NoFeaturePathway,
    NoStructurePathway,
    NoPseudo,
    NoPseudoNoStructure,
    /// Column-mean imputation in place of the learned feature pathway.
    MeanFill,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Full,
        Variant::NoFeatLoss,
        Variant::NoReconLoss,
        Variant::NoFeaturePathway,
        Variant::NoStructurePathway,
        Variant::NoPseudo,
        Variant::NoPseudoNoStructure,
        Variant::MeanFill,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::NoFeatLoss => "no-feat-loss",
            Self::NoReconLoss => "no-recon-loss",
            Self::NoFeaturePathway => "no-feature-pathway",
            Self::NoStructurePathway => "no-structure-pathway",
            Self::NoPseudo => "no-pseudo",
            Self::NoPseudoNoStructure => "no-pseudo-no-structure",
            Self::MeanFill => "mean-fill",
        }
    }

    pub fn configure(&self, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        match self {
            Self::Full => {}
            Self::NoFeatLoss => c.no_feat_loss = true,
            Self::NoReconLoss => c.no_recon_loss = true,
            Self::NoFeaturePathway | Self::MeanFill => c.no_feature_pathway = true,
            Self::NoStructurePathway => c.no_structure_pathway = true,
            Self::NoPseudo => c.no_pseudo = true,
            Self::NoPseudoNoStructure => {
                c.no_pseudo = true;
                c.no_structure_pathway = true;
            }
        }
        c
    }

    /// Input graph for this variant.
    pub fn prepare(&self, inc: &IncompleteGraph) -> Result<IncompleteGraph> {
        let mut out = inc.clone();
        if *self == Self::MeanFill {
            out.x_obs = mean_fill_baseline(&inc.x_obs, inc.feature_mask())?;
        }
        Ok(out)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// One config field taking several values.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub manifest: DatasetManifest,
    /// Overrides the even clique/contextual split derived from the manifest.
    pub injection: Option<InjectionSpec>,
    /// Node and edge masking rate per cell.
    pub mask_rates: Vec<f64>,
    pub mask_mode: MaskMode,
    pub variants: Vec<Variant>,
    pub sweep: Option<Sweep>,
    pub repeats: usize,
    pub config: TrainConfig,
    pub export_embeddings: bool,
}

impl ExperimentSpec {
    pub fn new(manifest: DatasetManifest, config: TrainConfig) -> Self {
        Self {
            manifest,
            injection: None,
            mask_rates: vec![0.3],
            mask_mode: MaskMode::RowWise,
            variants: vec![Variant::Full],
            sweep: None,
            repeats: 5,
            config,
            export_embeddings: false,
        }
    }
}

/// Everything produced by one masked training run.
pub struct RunArtifacts {
    pub bundle: ModelBundle,
    pub scores: ScoreReport,
    pub embedding: Tensor2,
    pub auroc: f64,
}

/// Masks a labeled graph, trains both stages and scores the real nodes.
pub fn run_once(
    graph: &AttributedGraph,
    mask_rate: f64,
    mode: MaskMode,
    mask_seed: u64,
    variant: Variant,
    cfg: &TrainConfig,
) -> Result<RunArtifacts> {
    let labels = graph
        .labels()
        .ok_or_else(|| Error::InvalidArgument("evaluation needs a labeled graph".into()))?;
    let masks = make_masks(graph, mask_rate, mask_rate, mode, mask_seed)?;
    let inc = variant.prepare(&apply_masks(graph, &masks)?)?;
    let cfg = variant.configure(cfg);
    let start = Instant::now();
    let bundle = finetune(pretrain(&inc, &cfg)?, &inc, &cfg)?;
    let embedding = embed(&bundle, &inc)?;
    let mut scores = ScoreReport::from_scores(latent_norms(&embedding), cfg.hash(), start.elapsed());
    let auroc = scores.evaluate(labels)?;
    Ok(RunArtifacts {
        bundle,
        scores,
        embedding,
        auroc,
    })
}

/// Labeled graph for one repeat: loaded, plus injected anomalies when the
/// dataset has no labels.
pub fn prepare_graph(spec: &ExperimentSpec, base: &AttributedGraph, repeat_seed: u64) -> Result<AttributedGraph> {
    if base.labels().is_some() {
        return Ok(base.clone());
    }
    let inj = spec.injection.unwrap_or_else(|| {
        InjectionSpec::for_outliers(
            spec.manifest.outliers,
            InjectionSpec::DEFAULT_CLIQUE_SIZE,
            InjectionSpec::DEFAULT_CANDIDATE_POOL,
        )
    });
    inject_anomalies(base, &inj, seed::derive(repeat_seed, "inject", 0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub mask_rate: f64,
    pub variant: Variant,
    pub setting: Option<(String, String)>,
    pub aurocs: Vec<f64>,
    /// `(repeat, message)` for runs that aborted.
    pub failures: Vec<(usize, String)>,
    pub runtime: Duration,
}

impl ReportRow {
    pub fn cell_id(&self) -> String {
        let mut id = format!("{}_mask{}_{}", self.dataset, self.mask_rate, self.variant);
        if let Some((k, v)) = &self.setting {
            id.push_str(&format!("_{k}={v}"));
        }
        id
    }

    pub fn mean(&self) -> f64 {
        if self.aurocs.is_empty() {
            return f64::NAN;
        }
        self.aurocs.iter().sum::<f64>() / self.aurocs.len() as f64
    }

    /// Sample standard deviation; 0 for a single run.
    pub fn std(&self) -> f64 {
        let n = self.aurocs.len();
        if n < 2 {
            return if n == 1 { 0.0 } else { f64::NAN };
        }
        let m = self.mean();
        (self.aurocs.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn render_tsv(&self) -> String {
        let mut s = String::from("dataset\tmask_rate\tvariant\tsetting\tmean\tstd\trepeats\tfailures\truntime_s\n");
        for r in &self.rows {
            let setting = r.setting.as_ref().map_or("-".to_string(), |(k, v)| format!("{k}={v}"));
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}\t{:.1}\n",
                r.dataset,
                r.mask_rate,
                r.variant,
                setting,
                r.mean(),
                r.std(),
                r.aurocs.len(),
                r.failures.len(),
                r.runtime.as_secs_f64()
            ));
        }
        s
    }

    pub fn render_metrics(&self) -> String {
        let mut pairs = Vec::new();
        for r in &self.rows {
            let id = r.cell_id();
            pairs.push((format!("{id}.mean"), r.mean().to_string()));
            pairs.push((format!("{id}.std"), r.std().to_string()));
            pairs.push((format!("{id}.repeats"), r.aurocs.len().to_string()));
            for (i, a) in r.aurocs.iter().enumerate() {
                pairs.push((format!("{id}.auroc.{i}"), a.to_string()));
            }
            for (rep, msg) in &r.failures {
                pairs.push((format!("{id}.failure.{rep}"), msg.replace('\n', " ")));
            }
            pairs.push((format!("{id}.runtime_s"), r.runtime.as_secs_f64().to_string()));
        }
        kv::render(&pairs)
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        text::write_string(&out.join("report.tsv"), &self.render_tsv())?;
        text::write_string(&out.join("metrics.txt"), &self.render_metrics())
    }
}

/// Runs every (mask rate, variant, sweep value) cell for `repeats` seeds.
/// Stage failures abort only the affected repeat and are recorded in the report.
pub fn run_experiment(spec: &ExperimentSpec, out: Option<&Path>) -> Result<ExperimentReport> {
    if spec.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let base = load_graph(&spec.manifest)?;
    let settings: Vec<Option<(String, String)>> = match &spec.sweep {
        None => vec![None],
        Some(s) => s.values.iter().map(|v| Some((s.key.clone(), v.clone()))).collect(),
    };
    let mut report = ExperimentReport::default();
    for &rate in &spec.mask_rates {
        for &variant in &spec.variants {
            for setting in &settings {
                let mut cfg = spec.config.clone();
                if let Some((k, v)) = setting {
                    cfg.set(k, v)?;
                }
                cfg.validate()?;
                let mut row = ReportRow {
                    dataset: spec.manifest.name.clone(),
                    mask_rate: rate,
                    variant,
                    setting: setting.clone(),
                    aurocs: Vec::new(),
                    failures: Vec::new(),
                    runtime: Duration::ZERO,
                };
                let start = Instant::now();
                for rep in 0..spec.repeats {
                    let rep_seed = seed::derive(spec.config.master_seed, "repeat", rep as u64);
                    let mut run_cfg = cfg.clone();
                    run_cfg.master_seed = rep_seed;
                    let outcome = prepare_graph(spec, &base, rep_seed).and_then(|g| {
                        run_once(&g, rate, spec.mask_mode, seed::derive(rep_seed, "mask", 0), variant, &run_cfg)
                    });
                    match outcome {
                        Ok(run) => {
                            log::info!("{} repeat {rep}: AUROC {:.4}", row.cell_id(), run.auroc);
                            row.aurocs.push(run.auroc);
                            if let Some(dir) = out {
                                run.scores.write(&dir.join("scores").join(format!("{}_rep{rep}.tsv", row.cell_id())))?;
                                if spec.export_embeddings {
                                    text::write_string(
                                        &dir.join("embeddings").join(format!("{}_rep{rep}.txt", row.cell_id())),
                                        &text::render_matrix(&run.embedding),
                                    )?;
                                }
                            }
                        }
                        Err(e) => {
                            log::warn!("{} repeat {rep} failed: {e}", row.cell_id());
                            row.failures.push((rep, e.to_string()));
                        }
                    }
                }
                row.runtime = start.elapsed();
                report.rows.push(row);
            }
        }
    }
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}
