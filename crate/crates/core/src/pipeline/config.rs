use std::path::Path;

use sha2::{Digest, Sha256};

use crate::graphio::{kv, text};
use crate::impute::{DiffusionConfig, DiffusionNorm};
use crate::latentspace::{AdjacencyNorm, PriorSpec, SinkhornConfig};
use crate::{Error, Result};

/// Learning rates tried by the convergence probe when `lr` is unset.
pub const LR_CANDIDATES: [f64; 3] = [1e-4, 5e-4, 1e-3];
pub const LR_PROBE_EPOCHS: usize = 10;

/// Every training knob. The config file uses these field names as keys.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub eta: f64,
    /// `None` runs the learning-rate probe.
    pub lr: Option<f64>,
    pub epochs_pre: usize,
    pub epochs_fine: usize,
    pub d_z: usize,
    /// Hidden width of the imputer and decoder; `None` means `d_z`.
    pub hidden: Option<usize>,
    pub r: f64,
    /// `None` means `1.2 r`.
    pub r_a: Option<f64>,
    /// `None` means `2 r`.
    pub r_b: Option<f64>,
    pub sinkhorn_eps: f64,
    pub sinkhorn_iters: usize,
    pub ppr_beta: f64,
    pub ppr_iters: usize,
    pub ppr_tol: f64,
    pub ppr_norm: DiffusionNorm,
    pub gcn_norm: AdjacencyNorm,
    pub top_k: Option<usize>,
    pub tau_a: f64,
    pub no_feat_loss: bool,
    pub no_recon_loss: bool,
    pub no_feature_pathway: bool,
    pub no_structure_pathway: bool,
    pub no_pseudo: bool,
    pub master_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let diffusion = DiffusionConfig::default();
        let sinkhorn = SinkhornConfig::default();
        Self {
            alpha: 0.01,
            lambda: 0.001,
            eta: 0.1,
            lr: None,
            epochs_pre: 100,
            epochs_fine: 100,
            d_z: 256,
            hidden: None,
            r: 8.0,
            r_a: None,
            r_b: None,
            sinkhorn_eps: sinkhorn.eps,
            sinkhorn_iters: sinkhorn.iters,
            ppr_beta: diffusion.beta,
            ppr_iters: diffusion.max_iters,
            ppr_tol: diffusion.tol,
            ppr_norm: diffusion.normalization,
            gcn_norm: AdjacencyNorm::Symmetric,
            top_k: None,
            tau_a: crate::pseudoanom::DEFAULT_TAU_A,
            no_feat_loss: false,
            no_recon_loss: false,
            no_feature_pathway: false,
            no_structure_pathway: false,
            no_pseudo: false,
            master_seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad value for `{key}`: {value:?} ({e})")))
}

fn parse_opt<T: std::str::FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if value == none {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_opt<T: ToString>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or_else(|| none.to_string(), T::to_string)
}

impl TrainConfig {
    pub fn hidden_width(&self) -> usize {
        self.hidden.unwrap_or(self.d_z)
    }

    pub fn prior(&self) -> PriorSpec {
        let mut p = PriorSpec::new(self.d_z, self.r);
        p.r_a = self.r_a.unwrap_or(p.r_a);
        p.r_b = self.r_b.unwrap_or(p.r_b);
        p
    }

    pub fn sinkhorn(&self) -> SinkhornConfig {
        SinkhornConfig {
            eps: self.sinkhorn_eps,
            iters: self.sinkhorn_iters,
        }
    }

    pub fn diffusion(&self) -> DiffusionConfig {
        DiffusionConfig {
            beta: self.ppr_beta,
            max_iters: self.ppr_iters,
            tol: self.ppr_tol,
            normalization: self.ppr_norm,
        }
    }

    /// Weight actually applied to the feature loss.
    pub fn feat_weight(&self) -> f64 {
        if self.no_feat_loss || self.no_feature_pathway {
            0.0
        } else {
            self.alpha
        }
    }

    pub fn recon_weight(&self) -> f64 {
        if self.no_recon_loss {
            0.0
        } else {
            self.lambda
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("alpha and lambda must be finite and nonnegative, got {} and {}", self.alpha, self.lambda));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta must lie in [0,1], got {}", self.eta));
        }
        if let Some(lr) = self.lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("lr must be positive, got {lr}"));
            }
        }
        if self.epochs_pre == 0 || self.epochs_fine == 0 {
            return bad("epochs_pre and epochs_fine must be at least 1".into());
        }
        if self.hidden == Some(0) || self.top_k == Some(0) {
            return bad("hidden and top_k must be at least 1 when set".into());
        }
        if !(self.tau_a > 0.0 && self.tau_a < 1.0) {
            return bad(format!("tau_a must lie in (0,1), got {}", self.tau_a));
        }
        self.prior().validate()?;
        self.sinkhorn().validate()?;
        self.diffusion().validate()
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "lr" => self.lr = parse_opt(key, value, "probe")?,
            "epochs_pre" => self.epochs_pre = parse(key, value)?,
            "epochs_fine" => self.epochs_fine = parse(key, value)?,
            "d_z" => self.d_z = parse(key, value)?,
            "hidden" => self.hidden = parse_opt(key, value, "auto")?,
            "r" => self.r = parse(key, value)?,
            "r_a" => self.r_a = parse_opt(key, value, "auto")?,
            "r_b" => self.r_b = parse_opt(key, value, "auto")?,
            "sinkhorn_eps" => self.sinkhorn_eps = parse(key, value)?,
            "sinkhorn_iters" => self.sinkhorn_iters = parse(key, value)?,
            "ppr_beta" => self.ppr_beta = parse(key, value)?,
            "ppr_iters" => self.ppr_iters = parse(key, value)?,
            "ppr_tol" => self.ppr_tol = parse(key, value)?,
            "ppr_norm" => self.ppr_norm = value.parse()?,
            "gcn_norm" => self.gcn_norm = value.parse()?,
            "top_k" => self.top_k = parse_opt(key, value, "none")?,
            "tau_a" => self.tau_a = parse(key, value)?,
            "no_feat_loss" => self.no_feat_loss = parse(key, value)?,
            "no_recon_loss" => self.no_recon_loss = parse(key, value)?,
            "no_feature_pathway" => self.no_feature_pathway = parse(key, value)?,
            "no_structure_pathway" => self.no_structure_pathway = parse(key, value)?,
            "no_pseudo" => self.no_pseudo = parse(key, value)?,
            "master_seed" => self.master_seed = parse(key, value)?,
            other => return Err(Error::InvalidArgument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let pairs = [
            ("alpha", self.alpha.to_string()),
            ("lambda", self.lambda.to_string()),
            ("eta", self.eta.to_string()),
            ("lr", show_opt(&self.lr, "probe")),
            ("epochs_pre", self.epochs_pre.to_string()),
            ("epochs_fine", self.epochs_fine.to_string()),
            ("d_z", self.d_z.to_string()),
            ("hidden", show_opt(&self.hidden, "auto")),
            ("r", self.r.to_string()),
            ("r_a", show_opt(&self.r_a, "auto")),
            ("r_b", show_opt(&self.r_b, "auto")),
            ("sinkhorn_eps", self.sinkhorn_eps.to_string()),
            ("sinkhorn_iters", self.sinkhorn_iters.to_string()),
            ("ppr_beta", self.ppr_beta.to_string()),
            ("ppr_iters", self.ppr_iters.to_string()),
            ("ppr_tol", self.ppr_tol.to_string()),
            ("ppr_norm", self.ppr_norm.to_string()),
            ("gcn_norm", self.gcn_norm.to_string()),
            ("top_k", show_opt(&self.top_k, "none")),
            ("tau_a", self.tau_a.to_string()),
            ("no_feat_loss", self.no_feat_loss.to_string()),
            ("no_recon_loss", self.no_recon_loss.to_string()),
            ("no_feature_pathway", self.no_feature_pathway.to_string()),
            ("no_structure_pathway", self.no_structure_pathway.to_string()),
            ("no_pseudo", self.no_pseudo.to_string()),
            ("master_seed", self.master_seed.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Applies `key = value` pairs over `self`, failing on unknown keys.
    pub fn apply_pairs(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Defaults overridden by a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let pairs = kv::parse(&text::read_to_string(path)?, path)?;
        let mut cfg = Self::default();
        cfg.apply_pairs(&pairs).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        text::write_string(path, &kv::render(&self.to_pairs()))
    }

    /// SHA-256 of the rendered config.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(kv::render(&self.to_pairs()).as_bytes()))
    }
}
