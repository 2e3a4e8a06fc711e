use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::diffmath::{read_checkpoint, write_checkpoint, NamedTensors, OptimizerState, ParamStore};
use crate::graphio::kv;
use crate::impute::{DiffusionReport, FeatureImputer};
use crate::latentspace::{Decoder, Projector};
use crate::pseudoanom::PseudoAnomalyBatch;
use crate::{Error, Result};

use super::TrainConfig;

const FORMAT: &str = "incomplete-gad-model 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Pretrain,
    Finetune,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pretrain => "pretrain",
            Self::Finetune => "finetune",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain" => Ok(Self::Pretrain),
            "finetune" => Ok(Self::Finetune),
            other => Err(Error::InvalidArgument(format!("unknown stage {other:?}"))),
        }
    }
}

/// Loss terms of one epoch. Terms that were not evaluated are 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub stage: Stage,
    pub total: f64,
    /// Sinkhorn divergence of the real embeddings to the ball prior.
    pub dist: f64,
    /// Sinkhorn divergence of the pseudo embeddings to the shell prior.
    pub shell: f64,
    pub feat: f64,
    pub recon: f64,
}

impl EpochLoss {
    fn render(&self) -> String {
        format!("{} {} {} {} {} {}", self.stage, self.total, self.dist, self.shell, self.feat, self.recon)
    }

    fn parse(s: &str, path: &Path) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(Error::corrupt(path, format!("bad history entry {s:?}")));
        }
        let num = |i: usize| kv::parse_value::<f64>(parts[i], "history", path);
        Ok(Self {
            stage: parts[0].parse().map_err(|_| Error::corrupt(path, format!("bad stage in {s:?}")))?,
            total: num(1)?,
            dist: num(2)?,
            shell: num(3)?,
            feat: num(4)?,
            recon: num(5)?,
        })
    }
}

/// Handles to the three networks inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Networks {
    pub imputer: FeatureImputer,
    pub projector: Projector,
    pub decoder: Decoder,
}

impl Networks {
    pub fn bind(store: &ParamStore) -> Result<Self> {
        let missing = |what: &str| Error::InvalidArgument(format!("parameter store has no {what}"));
        Ok(Self {
            imputer: FeatureImputer::bind(store).ok_or_else(|| missing("feature imputer"))?,
            projector: Projector::bind(store).ok_or_else(|| missing("projector"))?,
            decoder: Decoder::bind(store).ok_or_else(|| missing("decoder"))?,
        })
    }
}

/// Everything needed to continue training or to score.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub config: TrainConfig,
    pub store: ParamStore,
    pub optimizer: OptimizerState,
    pub history: Vec<EpochLoss>,
    pub pseudo: Option<PseudoAnomalyBatch>,
    pub diffusion: Option<DiffusionReport>,
    /// `(lr, loss after the probe epochs)` per candidate, when the probe ran.
    pub lr_probe: Vec<(f64, f64)>,
}

impl ModelBundle {
    /// Fresh networks for `d`-dimensional features, initialized from the master seed.
    pub fn init(d: usize, config: &TrainConfig, lr: f64) -> Result<Self> {
        config.validate()?;
        let mut rng = crate::seed::stream(config.master_seed, "init", 0);
        let mut store = ParamStore::new();
        let h = config.hidden_width();
        FeatureImputer::new(&mut store, d, h, &mut rng)?;
        Projector::new(&mut store, d, config.d_z, &mut rng)?;
        Decoder::new(&mut store, config.d_z, h, d, &mut rng)?;
        let optimizer = OptimizerState::new(&store, lr);
        Ok(Self {
            config: config.clone(),
            store,
            optimizer,
            history: Vec::new(),
            pseudo: None,
            diffusion: None,
            lr_probe: Vec::new(),
        })
    }

    pub fn networks(&self) -> Result<Networks> {
        Networks::bind(&self.store)
    }

    pub fn feature_dim(&self) -> Result<usize> {
        Ok(self.networks()?.imputer.mlp.input_dim(&self.store))
    }

    pub fn epochs_in(&self, stage: Stage) -> usize {
        self.history.iter().filter(|h| h.stage == stage).count()
    }

    pub fn to_archive(&self) -> NamedTensors {
        let mut tensors = Vec::new();
        for id in self.store.ids() {
            tensors.push((self.store.name(id).to_string(), self.store.value(id).clone()));
        }
        for (i, id) in self.store.ids().enumerate() {
            let name = self.store.name(id);
            tensors.push((format!("adam.m/{name}"), self.optimizer.first[i].clone()));
            tensors.push((format!("adam.v/{name}"), self.optimizer.second[i].clone()));
        }
        let mut meta: Vec<(String, String)> = vec![("format".into(), FORMAT.into())];
        meta.extend(self.config.to_pairs().into_iter().map(|(k, v)| (format!("config.{k}"), v)));
        let o = &self.optimizer;
        for (k, v) in [("lr", o.lr), ("beta1", o.beta1), ("beta2", o.beta2), ("eps", o.eps)] {
            meta.push((format!("adam.{k}"), v.to_string()));
        }
        meta.push(("adam.step".into(), o.step.to_string()));
        meta.push(("history.count".into(), self.history.len().to_string()));
        for (i, h) in self.history.iter().enumerate() {
            meta.push((format!("history.{i}"), h.render()));
        }
        for (i, (lr, loss)) in self.lr_probe.iter().enumerate() {
            meta.push((format!("lr_probe.{i}"), format!("{lr} {loss}")));
        }
        if let Some(p) = &self.pseudo {
            tensors.push(("pseudo/z".into(), p.z_pseudo.clone()));
            tensors.push(("pseudo/x".into(), p.x_a.clone()));
            tensors.push(("pseudo/a".into(), p.a_a.clone()));
            meta.push(("pseudo.tau_a".into(), p.tau_a.to_string()));
            meta.push(("pseudo.eta".into(), p.eta.to_string()));
        }
        if let Some(d) = &self.diffusion {
            meta.push(("diffusion.iterations".into(), d.iterations.to_string()));
            meta.push(("diffusion.last_change".into(), d.last_change.to_string()));
            meta.push(("diffusion.converged".into(), d.converged.to_string()));
            if let Some(w) = &d.warning {
                meta.push(("diffusion.warning".into(), w.replace('\n', " ")));
            }
        }
        NamedTensors {
            tensors,
            meta: kv::render(&meta),
        }
    }

    pub fn from_archive(archive: &NamedTensors, path: &Path) -> Result<Self> {
        let meta = kv::parse(&archive.meta, path)?;
        let format = kv::require(&meta, "format", path)?;
        if format != FORMAT {
            return Err(Error::corrupt(path, format!("unsupported model format {format:?}")));
        }
        let mut config = TrainConfig::default();
        for (k, v) in &meta {
            if let Some(field) = k.strip_prefix("config.") {
                config.set(field, v).map_err(|e| Error::corrupt(path, e.to_string()))?;
            }
        }
        let mut store = ParamStore::new();
        for (name, t) in &archive.tensors {
            if !name.contains('/') {
                store.add(name.clone(), t.clone())?;
            }
        }
        let num = |k: &str| -> Result<f64> { kv::parse_value(kv::require(&meta, k, path)?, k, path) };
        let mut optimizer = OptimizerState::new(&store, num("adam.lr")?);
        optimizer.beta1 = num("adam.beta1")?;
        optimizer.beta2 = num("adam.beta2")?;
        optimizer.eps = num("adam.eps")?;
        optimizer.step = kv::parse_value(kv::require(&meta, "adam.step", path)?, "adam.step", path)?;
        for (i, id) in store.ids().enumerate() {
            let name = store.name(id);
            for (prefix, slot) in [("adam.m/", &mut optimizer.first[i]), ("adam.v/", &mut optimizer.second[i])] {
                let t = archive
                    .get(&format!("{prefix}{name}"))
                    .ok_or_else(|| Error::corrupt(path, format!("missing optimizer moment {prefix}{name}")))?;
                if t.dim() != slot.dim() {
                    return Err(Error::corrupt(path, format!("optimizer moment {prefix}{name} has wrong shape")));
                }
                slot.assign(t);
            }
        }
        let count: usize = kv::parse_value(kv::require(&meta, "history.count", path)?, "history.count", path)?;
        let history = (0..count)
            .map(|i| EpochLoss::parse(kv::require(&meta, &format!("history.{i}"), path)?, path))
            .collect::<Result<Vec<_>>>()?;
        let mut lr_probe = Vec::new();
        while let Some(v) = kv::get(&meta, &format!("lr_probe.{}", lr_probe.len())) {
            let (a, b) = v
                .split_once(' ')
                .ok_or_else(|| Error::corrupt(path, format!("bad lr probe entry {v:?}")))?;
            lr_probe.push((kv::parse_value(a, "lr_probe", path)?, kv::parse_value(b, "lr_probe", path)?));
        }
        let pseudo = match (archive.get("pseudo/z"), archive.get("pseudo/x"), archive.get("pseudo/a")) {
            (Some(z), Some(x), Some(a)) => Some(PseudoAnomalyBatch {
                z_pseudo: z.clone(),
                x_a: x.clone(),
                a_a: a.clone(),
                tau_a: num("pseudo.tau_a")?,
                eta: num("pseudo.eta")?,
            }),
            _ => None,
        };
        let diffusion = match kv::get(&meta, "diffusion.iterations") {
            Some(it) => Some(DiffusionReport {
                config: config.diffusion(),
                iterations: kv::parse_value(it, "diffusion.iterations", path)?,
                last_change: num("diffusion.last_change")?,
                converged: kv::parse_value(kv::require(&meta, "diffusion.converged", path)?, "diffusion.converged", path)?,
                warning: kv::get(&meta, "diffusion.warning").map(str::to_string),
            }),
            None => None,
        };
        let bundle = Self {
            config,
            store,
            optimizer,
            history,
            pseudo,
            diffusion,
            lr_probe,
        };
        bundle.networks().map_err(|e| Error::corrupt(path, e.to_string()))?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_checkpoint(path, &self.to_archive())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_archive(&read_checkpoint(path)?, path)
    }
}
