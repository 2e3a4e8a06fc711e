use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use incomplete_gad::graphio::{
    apply_masks, community_graph, inject_anomalies, load_bundle, load_graph, make_masks, save_bundle, text,
    AttributedGraph, CommunitySpec, DatasetManifest, InjectionSpec, MaskMode,
};
use incomplete_gad::pipeline::{
    auroc, finetune_with, gradcheck_stage, pretrain_with, resume_pretrain, run_experiment, score_nodes,
    ExperimentSpec, ModelBundle, ScoreReport, Stage, Sweep, TrainConfig, TrainData, Variant,
};
use incomplete_gad::{seed, Error, Result};

#[derive(Parser)]
#[command(name = "igad", version, about = "Anomaly detection on graphs with missing features and edges")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed; overrides `master_seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` training config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Single-threaded, seed-determined execution.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    deterministic: bool,
    #[arg(long, global = true, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F64,
    F32,
}

#[derive(Subcommand)]
enum Command {
    /// Inject clique and contextual anomalies into an unlabeled dataset.
    Inject {
        #[arg(long)]
        manifest: PathBuf,
        /// Number of anomalies; defaults to the manifest's `outliers`.
        #[arg(long)]
        outliers: Option<usize>,
        #[arg(long, default_value_t = InjectionSpec::DEFAULT_CLIQUE_SIZE)]
        clique_size: usize,
        #[arg(long, default_value_t = InjectionSpec::DEFAULT_CANDIDATE_POOL)]
        pool: usize,
    },
    /// Hide node features and edges, writing an incomplete-graph bundle.
    Mask {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        node_rate: f64,
        #[arg(long, default_value_t = 0.3)]
        edge_rate: f64,
        #[arg(long, default_value = "row-wise")]
        mode: String,
    },
    /// First training stage.
    Pretrain {
        #[arg(long)]
        bundle: PathBuf,
        /// Continue from a pretraining checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Write `checkpoint.bin` every this many epochs.
        #[arg(long)]
        checkpoint_every: Option<usize>,
    },
    /// Second training stage with pseudo-anomalies.
    Finetune {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Score every node by its latent norm.
    Score {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// AUROC of a score file against bundle or file labels.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, conflicts_with = "labels")]
        bundle: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// End-to-end experiment: inject, mask, train, score, evaluate.
    Run(RunArgs),
    /// Compare analytic and finite-difference gradients of a training loss.
    Gradcheck {
        /// Check a trained model on a bundle instead of a random instance.
        #[arg(long, requires = "model")]
        bundle: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "pretrain")]
        stage: String,
        #[arg(long, default_value_t = 12)]
        nodes: usize,
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        d_z: usize,
        #[arg(long, default_value_t = 200)]
        sinkhorn_iters: usize,
        /// Number of scalars to probe; every scalar when omitted.
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Run the experiment for several values of one config key.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.3")]
    mask_rates: Vec<f64>,
    #[arg(long, default_value = "row-wise")]
    mode: String,
    #[arg(long, value_delimiter = ',', default_value = "full")]
    variants: Vec<String>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long)]
    export_embeddings: bool,
}

fn config(g: &Global) -> Result<TrainConfig> {
    let mut cfg = match &g.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_graph(dir: &Path, name: &str, g: &AttributedGraph) -> Result<PathBuf> {
    text::write_string(&dir.join("features.txt"), &text::render_matrix(g.features()))?;
    text::write_string(&dir.join("edges.txt"), &text::render_edges(g.edges()))?;
    let mut manifest = format!(
        "name = {name}\nfeatures = features.txt\nedges = edges.txt\nnodes = {}\nedge_count = {}\nfeature_dim = {}\n",
        g.n(),
        g.edge_count(),
        g.d()
    );
    if let Some(labels) = g.labels() {
        text::write_string(&dir.join("labels.txt"), &text::render_labels(labels))?;
        manifest.push_str(&format!("labels = labels.txt\noutliers = {}\n", g.outlier_count().unwrap_or(0)));
    } else {
        manifest.push_str("outliers = 0\n");
    }
    let path = dir.join(format!("{name}.manifest"));
    text::write_string(&path, &manifest)?;
    Ok(path)
}

fn experiment(run: &RunArgs, cfg: TrainConfig, sweep: Option<Sweep>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(DatasetManifest::load(&run.manifest)?, cfg);
    spec.mask_rates = run.mask_rates.clone();
    spec.mask_mode = run.mode.parse()?;
    spec.variants = run.variants.iter().map(|v| v.parse()).collect::<Result<Vec<Variant>>>()?;
    spec.repeats = run.repeats;
    spec.export_embeddings = run.export_embeddings;
    spec.sweep = sweep;
    Ok(spec)
}

fn print_history(bundle: &ModelBundle, stage: Stage) {
    let hist: Vec<_> = bundle.history.iter().filter(|h| h.stage == stage).collect();
    if let (Some(first), Some(last)) = (hist.first(), hist.last()) {
        println!("{stage}: {} epochs, loss {:.6} -> {:.6}", hist.len(), first.total, last.total);
    }
}

fn execute(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if g.precision == Precision::F32 {
        return Err(Error::InvalidArgument("only f64 precision is supported".into()));
    }
    if !g.deterministic {
        log::warn!("non-deterministic mode has no effect: execution is always single-threaded");
    }
    let out = &g.out;
    match &cli.command {
        Command::Inject {
            manifest,
            outliers,
            clique_size,
            pool,
        } => {
            let m = DatasetManifest::load(manifest)?;
            let spec = InjectionSpec::for_outliers(outliers.unwrap_or(m.outliers), *clique_size, *pool);
            let g0 = load_graph(&m)?;
            let injected = inject_anomalies(&g0, &spec, config(g)?.master_seed)?;
            let path = write_graph(out, &m.name, &injected)?;
            println!("injected {} anomalies; manifest {}", spec.total(), path.display());
        }
        Command::Mask {
            manifest,
            node_rate,
            edge_rate,
            mode,
        } => {
            let graph = load_graph(&DatasetManifest::load(manifest)?)?;
            let masks = make_masks(&graph, *node_rate, *edge_rate, mode.parse()?, config(g)?.master_seed)?;
            let inc = apply_masks(&graph, &masks)?;
            save_bundle(out, &inc, graph.labels())?;
            println!(
                "bundle {}: {} nodes, {} of {} edges observed",
                out.display(),
                inc.n(),
                inc.edges_obs.len(),
                graph.edge_count()
            );
        }
        Command::Pretrain {
            bundle,
            resume,
            checkpoint_every,
        } => {
            let inc = load_bundle(bundle)?.graph;
            let ckpt = out.join("checkpoint.bin");
            let every = checkpoint_every.unwrap_or(0);
            let save = |b: &ModelBundle| -> Result<()> {
                if every > 0 && b.history.len() % every == 0 {
                    b.save(&ckpt)?;
                }
                Ok(())
            };
            let model = match resume {
                Some(p) => resume_pretrain(ModelBundle::load(p)?, &inc, save)?,
                None => pretrain_with(&inc, &config(g)?, save)?,
            };
            model.save(&out.join("model.bin"))?;
            print_history(&model, Stage::Pretrain);
        }
        Command::Finetune { bundle, model } => {
            let inc = load_bundle(bundle)?.graph;
            let mut m = ModelBundle::load(model)?;
            let mut cfg = m.config.clone();
            if g.config.is_some() {
                cfg = config(g)?;
            }
            if let Some(s) = g.seed {
                cfg.master_seed = s;
            }
            m = finetune_with(m, &inc, &cfg, |_| Ok(()))?;
            m.save(&out.join("model.bin"))?;
            print_history(&m, Stage::Finetune);
        }
        Command::Score { bundle, model } => {
            let b = load_bundle(bundle)?;
            let mut report = score_nodes(&ModelBundle::load(model)?, &b.graph)?;
            report.write(&out.join("scores.tsv"))?;
            if let Some(labels) = &b.labels {
                println!("AUROC {:.6}", report.evaluate(labels)?);
            }
            println!("scores written to {}", out.join("scores.tsv").display());
        }
        Command::Eval { scores, bundle, labels } => {
            let s = ScoreReport::read_scores(scores)?;
            let l = match (bundle, labels) {
                (Some(b), _) => load_bundle(b)?
                    .labels
                    .ok_or_else(|| Error::InvalidArgument("bundle has no labels".into()))?,
                (None, Some(p)) => text::parse_labels(&text::read_to_string(p)?, p)?,
                (None, None) => return Err(Error::InvalidArgument("eval needs --bundle or --labels".into())),
            };
            println!("AUROC {:.6}", auroc(&s, &l)?);
        }
        Command::Run(run) => {
            let report = run_experiment(&experiment(run, config(g)?, None)?, Some(out))?;
            print!("{}", report.render_tsv());
        }
        Command::Sweep { run, key, values } => {
            let cfg = config(g)?;
            // reject unknown keys before any training starts
            cfg.clone().set(key, &values[0])?;
            let sweep = Sweep {
                key: key.clone(),
                values: values.clone(),
            };
            let report = run_experiment(&experiment(run, cfg, Some(sweep))?, Some(out))?;
            print!("{}", report.render_tsv());
        }
        Command::Gradcheck {
            bundle,
            model,
            stage,
            nodes,
            dim,
            d_z,
            sinkhorn_iters,
            probes,
            h,
            tol,
        } => {
            let stage: Stage = stage.parse()?;
            let (m, data) = match (bundle, model) {
                (Some(b), Some(p)) => {
                    let inc = load_bundle(b)?.graph;
                    let m = ModelBundle::load(p)?;
                    let data = match (stage, &m.pseudo) {
                        (Stage::Finetune, Some(batch)) => TrainData::augmented(&inc, batch, &m.config)?,
                        (Stage::Finetune, None) => {
                            return Err(Error::InvalidArgument("model has no pseudo-anomaly batch".into()))
                        }
                        (Stage::Pretrain, _) => TrainData::real(&inc, &m.config)?,
                    };
                    (m, data)
                }
                _ => {
                    if stage != Stage::Pretrain {
                        return Err(Error::InvalidArgument("random instances check the pretraining loss".into()));
                    }
                    let mut cfg = config(g)?;
                    cfg.d_z = *d_z;
                    cfg.sinkhorn_iters = *sinkhorn_iters;
                    cfg.lr = Some(1e-3);
                    let spec = CommunitySpec {
                        nodes: *nodes,
                        communities: 2,
                        feature_dim: *dim,
                        p_in: 0.5,
                        p_out: 0.1,
                        ..Default::default()
                    };
                    let graph = community_graph(&spec, cfg.master_seed)?;
                    let masks = make_masks(
                        &graph,
                        0.3,
                        0.3,
                        MaskMode::ElementWise,
                        seed::derive(cfg.master_seed, "mask", 0),
                    )?;
                    let inc = apply_masks(&graph, &masks)?;
                    let data = TrainData::real(&inc, &cfg)?;
                    (ModelBundle::init(inc.d(), &cfg, 1e-3)?, data)
                }
            };
            let start = Instant::now();
            let report = gradcheck_stage(&m, &data, stage, probes.unwrap_or(usize::MAX), *h, *tol)?;
            println!(
                "{} probes, max relative error {:.3e} (tol {:.0e}), {:.1}s: {}",
                report.probes.len(),
                report.max_rel_err,
                report.tol,
                start.elapsed().as_secs_f64(),
                if report.passed { "PASS" } else { "FAIL" }
            );
            if !report.passed {
                return Err(Error::Numerical("gradient check failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
