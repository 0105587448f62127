use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::MotionRule;
use crate::optim::DEFAULT_LEARNING_RATE;
use crate::social::PoolingStrategy;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    #[serde(rename = "joint")]
    Joint,
    #[serde(rename = "joint+context")]
    JointContext,
    #[serde(rename = "joint+social")]
    JointSocial,
    #[serde(rename = "joint+social+context")]
    JointSocialContext,
    /// Forecasts root-centered poses; the global trajectory comes from a motion rule.
    #[serde(rename = "local-pose")]
    LocalPose,
    #[serde(rename = "local-pose+social")]
    LocalPoseSocial,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Joint,
        Variant::JointContext,
        Variant::JointSocial,
        Variant::JointSocialContext,
        Variant::LocalPose,
        Variant::LocalPoseSocial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Joint => "joint",
            Variant::JointContext => "joint+context",
            Variant::JointSocial => "joint+social",
            Variant::JointSocialContext => "joint+social+context",
            Variant::LocalPose => "local-pose",
            Variant::LocalPoseSocial => "local-pose+social",
        }
    }

    pub fn has_social(self) -> bool {
        matches!(self, Variant::JointSocial | Variant::JointSocialContext | Variant::LocalPoseSocial)
    }

    pub fn has_context(self) -> bool {
        matches!(self, Variant::JointContext | Variant::JointSocialContext)
    }

    pub fn is_local(self) -> bool {
        matches!(self, Variant::LocalPose | Variant::LocalPoseSocial)
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
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::InvalidArgument(format!("unknown variant {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

/// Architecture and training hyperparameters. Serialized as TOML inside checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Observed frames per window (`T_obs`).
    pub obs_frames: usize,
    /// Forecast frames per window (`T_pred`).
    pub pred_frames: usize,
    /// Joints per pose (`L`).
    pub joints: usize,
    /// Coordinates per joint (`D`).
    pub dims: usize,
    /// Encoder hidden size `K`; also the social feature size.
    pub hidden: usize,
    /// Context feature size `K_C`.
    pub context_dim: usize,
    /// Raw context descriptor size `F`.
    pub context_raw_dim: usize,
    /// Context MLP hidden width; `F` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context_hidden: Option<usize>,
    pub pooling: PoolingStrategy,
    pub variant: Variant,
    /// Root trajectory rule for the local-pose variants.
    pub local_motion: MotionRule,
    pub velocity_window: usize,
    pub dropout: f64,
    pub lr: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
    /// Scenes per optimizer step.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::posetrack()
    }
}

impl ModelConfig {
    /// 15 observed / 15 forecast frames, 14 joints in 2D.
    pub fn posetrack() -> Self {
        ModelConfig {
            obs_frames: 15,
            pred_frames: 15,
            joints: 14,
            dims: 2,
            hidden: 1024,
            context_dim: 256,
            context_raw_dim: 1024,
            context_hidden: None,
            pooling: PoolingStrategy::Max,
            variant: Variant::Joint,
            local_motion: MotionRule::Zero,
            velocity_window: 1,
            dropout: 0.7,
            lr: DEFAULT_LEARNING_RATE,
            lr_decay: 0.95,
            batch_size: 16,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }

    /// 40 observed / 10 forecast frames, 13 joints in 3D.
    pub fn ntu() -> Self {
        ModelConfig {
            obs_frames: 40,
            pred_frames: 10,
            joints: 13,
            dims: 3,
            ..ModelConfig::posetrack()
        }
    }

    pub fn width(&self) -> usize {
        self.joints * self.dims
    }

    pub fn context_hidden_dim(&self) -> usize {
        self.context_hidden.unwrap_or(self.context_raw_dim)
    }

    /// `K` for the embedding, `K` for the social block, plus `K_C` with context.
    pub fn decoder_hidden(&self) -> usize {
        2 * self.hidden + if self.variant.has_context() { self.context_dim } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.obs_frames < 2 {
            return fail(format!("obs_frames must be at least 2, got {}", self.obs_frames));
        }
        if self.pred_frames < 1 {
            return fail("pred_frames must be at least 1".into());
        }
        if self.joints < 2 {
            return fail(format!("joints must be at least 2, got {}", self.joints));
        }
        if !(self.dims == 2 || self.dims == 3) {
            return fail(format!("dims must be 2 or 3, got {}", self.dims));
        }
        if self.hidden == 0 {
            return fail("hidden must be positive".into());
        }
        if self.variant.has_context() && (self.context_dim == 0 || self.context_raw_dim == 0 || self.context_hidden_dim() == 0) {
            return fail("context sizes must be positive for context variants".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return fail(format!("lr_decay must be in (0, 1], got {}", self.lr_decay));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return fail("batch_size and max_epochs must be positive".into());
        }
        if self.velocity_window == 0 || self.velocity_window >= self.obs_frames {
            return fail(format!(
                "velocity_window must be in 1..{}, got {}",
                self.obs_frames, self.velocity_window
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ModelConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_protocol_windows() {
        let p = ModelConfig::posetrack();
        assert_eq!((p.obs_frames, p.pred_frames, p.joints, p.dims), (15, 15, 14, 2));
        let n = ModelConfig::ntu();
        assert_eq!((n.obs_frames, n.pred_frames, n.joints, n.dims), (40, 10, 13, 3));
        assert_eq!((p.hidden, p.context_dim, p.context_raw_dim), (1024, 256, 1024));
        assert_eq!(p.dropout, 0.7);
        assert_eq!(p.lr, 5e-4);
        assert_eq!(p.lr_decay, 0.95);
        p.validate().unwrap();
        n.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let c = ModelConfig {
            variant: Variant::JointSocialContext,
            pooling: PoolingStrategy::Average,
            context_hidden: Some(17),
            lr: 1.234_567_890_123e-3,
            seed: 99,
            ..ModelConfig::ntu()
        };
        assert_eq!(ModelConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn decoder_width_per_variant() {
        let mut c = ModelConfig {
            hidden: 4,
            context_dim: 3,
            ..ModelConfig::default()
        };
        c.variant = Variant::Joint;
        assert_eq!(c.decoder_hidden(), 8);
        c.variant = Variant::JointSocialContext;
        assert_eq!(c.decoder_hidden(), 11);
    }

    #[test]
    fn invalid_values_rejected() {
        for c in [
            ModelConfig { obs_frames: 1, ..Default::default() },
            ModelConfig { dropout: 1.0, ..Default::default() },
            ModelConfig { dims: 4, ..Default::default() },
            ModelConfig { velocity_window: 15, ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
        assert!(ModelConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn variant_names() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!(Variant::JointSocialContext.has_social() && Variant::JointSocialContext.has_context());
        assert!(Variant::LocalPoseSocial.is_local() && !Variant::LocalPoseSocial.has_context());
    }
}
