//! Architecture and training configuration for the four vanilla models.

use serde::{Deserialize, Serialize};
use tsgb_core::ScalerMethod;

use crate::error::{ModelError, Result};

/// Shape of one generated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub length: usize,
    pub features: usize,
}

impl Geometry {
    pub fn new(length: usize, features: usize) -> Self {
        Self { length, features }
    }

    pub fn flat(&self) -> usize {
        self.length * self.features
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "VanillaVAE")]
    Vae,
    #[serde(rename = "VanillaGAN")]
    Gan,
    #[serde(rename = "VanillaDDPM")]
    Ddpm,
    #[serde(rename = "VanillaMAF")]
    Maf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::Vae, Self::Gan, Self::Ddpm, Self::Maf];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Vae => "VanillaVAE",
            Self::Gan => "VanillaGAN",
            Self::Ddpm => "VanillaDDPM",
            Self::Maf => "VanillaMAF",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    /// Name of the per-epoch validation metric used for early stopping.
    pub fn validation_metric(&self) -> &'static str {
        match self {
            Self::Vae => "negative_elbo",
            Self::Gan => "wasserstein",
            Self::Ddpm => "denoising_loss",
            Self::Maf => "nll_per_dim",
        }
    }
}

fn default_hidden() -> Vec<usize> {
    vec![128; 3]
}

fn default_cond_width() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VaeConfig {
    pub latent: usize,
    pub hidden: Vec<usize>,
    pub beta: f64,
    pub cond_width: usize,
    pub lr: f64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self {
            latent: 16,
            hidden: default_hidden(),
            beta: 1.0,
            cond_width: default_cond_width(),
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub gp_lambda: f64,
    pub n_critic: usize,
    pub cond_width: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            noise_dim: 32,
            hidden: default_hidden(),
            critic_hidden: default_hidden(),
            gp_lambda: 10.0,
            n_critic: 5,
            cond_width: default_cond_width(),
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleKind {
    Linear { beta_start: f64, beta_end: f64 },
    Cosine { offset: f64 },
}

impl Default for ScheduleKind {
    fn default() -> Self {
        Self::Linear {
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    #[default]
    Epsilon,
    X0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdpmConfig {
    pub n_steps: usize,
    pub schedule: ScheduleKind,
    pub prediction: Prediction,
    pub width: usize,
    pub depth: usize,
    pub heads: usize,
    pub mlp_ratio: usize,
    /// Zero-initialize modulation and output layers.
    pub zero_init: bool,
    /// Denoised estimates are clipped to the training range widened by this
    /// many (normalized) standard deviations.
    pub clip_sd: f64,
    pub lr: f64,
}

impl Default for DdpmConfig {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            schedule: ScheduleKind::default(),
            prediction: Prediction::Epsilon,
            width: 128,
            depth: 4,
            heads: 4,
            mlp_ratio: 4,
            zero_init: true,
            clip_sd: 1.0,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MafConfig {
    pub n_layers: usize,
    pub hidden: Vec<usize>,
    pub cond_width: usize,
    /// Zero-initialize each layer's output so the flow starts as the identity.
    pub identity_init: bool,
    pub lr: f64,
}

impl Default for MafConfig {
    fn default() -> Self {
        Self {
            n_layers: 5,
            hidden: default_hidden(),
            cond_width: default_cond_width(),
            identity_init: true,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params")]
pub enum ModelConfig {
    #[serde(rename = "VanillaVAE")]
    Vae(VaeConfig),
    #[serde(rename = "VanillaGAN")]
    Gan(GanConfig),
    #[serde(rename = "VanillaDDPM")]
    Ddpm(DdpmConfig),
    #[serde(rename = "VanillaMAF")]
    Maf(MafConfig),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Vae => Self::Vae(VaeConfig::default()),
            ModelKind::Gan => Self::Gan(GanConfig::default()),
            ModelKind::Ddpm => Self::Ddpm(DdpmConfig::default()),
            ModelKind::Maf => Self::Maf(MafConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Vae(_) => ModelKind::Vae,
            Self::Gan(_) => ModelKind::Gan,
            Self::Ddpm(_) => ModelKind::Ddpm,
            Self::Maf(_) => ModelKind::Maf,
        }
    }

    pub fn default_lr(&self) -> f64 {
        match self {
            Self::Vae(c) => c.lr,
            Self::Gan(c) => c.lr,
            Self::Ddpm(c) => c.lr,
            Self::Maf(c) => c.lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(ModelError::config(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        let widths = |name: &str, v: &[usize]| {
            if v.is_empty() || v.contains(&0) {
                Err(ModelError::config(format!("{name} needs at least one positive width")))
            } else {
                Ok(())
            }
        };
        match self {
            Self::Vae(c) => {
                positive("latent", c.latent)?;
                widths("hidden", &c.hidden)?;
                positive("cond_width", c.cond_width)?;
                if !(c.beta >= 0.0 && c.beta.is_finite()) {
                    return Err(ModelError::config("beta must be finite and nonnegative"));
                }
            }
            Self::Gan(c) => {
                positive("noise_dim", c.noise_dim)?;
                positive("n_critic", c.n_critic)?;
                positive("cond_width", c.cond_width)?;
                widths("hidden", &c.hidden)?;
                widths("critic_hidden", &c.critic_hidden)?;
                if c.gp_lambda < 0.0 {
                    return Err(ModelError::config("gp_lambda must be nonnegative"));
                }
            }
            Self::Ddpm(c) => {
                positive("n_steps", c.n_steps)?;
                positive("depth", c.depth)?;
                positive("heads", c.heads)?;
                positive("mlp_ratio", c.mlp_ratio)?;
                if c.width == 0 || c.width % c.heads != 0 || c.width % 2 != 0 {
                    return Err(ModelError::config("width must be even and divisible by heads"));
                }
                if c.clip_sd < 0.0 {
                    return Err(ModelError::config("clip_sd must be nonnegative"));
                }
            }
            Self::Maf(c) => {
                positive("n_layers", c.n_layers)?;
                positive("cond_width", c.cond_width)?;
                widths("hidden", &c.hidden)?;
            }
        }
        if !(self.default_lr() > 0.0) {
            return Err(ModelError::config("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Overrides the model's default learning rate.
    pub lr: Option<f64>,
    pub scaler: ScalerMethod,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            max_epochs: 300,
            patience: 10,
            batch_size: 64,
            lr: None,
            scaler: ScalerMethod::Zscore,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(ModelError::config("max_epochs, patience and batch_size must be positive"));
        }
        if self.patience > self.max_epochs {
            return Err(ModelError::config("patience cannot exceed max_epochs"));
        }
        if let Some(lr) = self.lr {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(ModelError::config("lr must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_config_round_trips() {
        for kind in ModelKind::ALL {
            let cfg = ModelConfig::default_for(kind);
            let json = serde_json::to_string(&cfg).unwrap();
            assert!(json.contains(kind.name()));
            let back: ModelConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back, cfg);
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = r#"{"name":"VanillaVAE","params":{"latent":4,"bogus":1}}"#;
        assert!(serde_json::from_str::<ModelConfig>(bad).is_err());
        let partial = r#"{"name":"VanillaVAE","params":{"latent":4}}"#;
        let cfg: ModelConfig = serde_json::from_str(partial).unwrap();
        assert!(matches!(cfg, ModelConfig::Vae(VaeConfig { latent: 4, .. })));
    }

    #[test]
    fn trainer_checks() {
        TrainerConfig::default().validate().unwrap();
        let bad = TrainerConfig {
            patience: 400,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(ModelConfig::Vae(VaeConfig {
            beta: -1.0,
            ..Default::default()
        })
        .validate()
        .is_err());
    }

    #[test]
    fn names_parse() {
        assert_eq!(ModelKind::from_name("vanilladdpm"), Some(ModelKind::Ddpm));
        assert_eq!(ModelKind::from_name("TimeGAN"), None);
    }
}
