//! Finite-difference check of the full forward/backward pass at toy sizes.

use std::fmt;

use crate::data::{generate_synthetic, JointSet, Pose, Scenario, Scene, SyntheticConfig};
use crate::error::Result;
use crate::gradcheck::{compare_grads, finite_diff_grad_extrapolated, GradDiscrepancy};
use crate::model::config::{ModelConfig, Variant};
use crate::model::forecast::{scene_loss, scene_loss_and_grad};
use crate::model::params::ModelParams;
use crate::params::ParamSet;
use crate::rng::SeededRng;
use crate::social::{ContextProvider, Mode};

/// Probe step for the extrapolated differences.
pub const GRADCHECK_STEP: f64 = 1e-3;
/// Largest accepted relative error between analytic and numeric gradients.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Hidden 3, 3 joints in 2D, 3 observed and 2 forecast frames, 3-dim raw context.
pub fn toy_config(variant: Variant) -> ModelConfig {
    ModelConfig {
        obs_frames: 3,
        pred_frames: 2,
        joints: 3,
        dims: 2,
        hidden: 3,
        context_dim: 2,
        context_raw_dim: 3,
        context_hidden: Some(3),
        variant,
        dropout: 0.5,
        ..ModelConfig::default()
    }
}

/// A 5-frame scene with 1 to 3 persons, scaled so a toy network stays out of saturation.
pub fn toy_scene(seed: u64, persons: usize) -> Result<Scene<f64>> {
    let cfg = SyntheticConfig {
        joint_set: JointSet::Minimal3,
        frames: 5,
        persons,
        context_dim: Some(3),
        ..SyntheticConfig::new(if persons == 2 { Scenario::React } else { Scenario::Independent })
    };
    let s = generate_synthetic::<f64>(&cfg, seed)?;
    let mut b = s.to_builder();
    for (_, frames) in b.persons.iter_mut() {
        for f in frames.iter_mut() {
            let c: Vec<Vec<f64>> = (0..f.num_joints()).map(|j| f.joint(j).iter().map(|v| v * 0.05).collect()).collect();
            *f = Pose::from_joints(&c)?;
        }
    }
    b.build()
}

/// Every entry uniform in ±0.8 so gates sit away from both zero and saturation.
pub fn toy_params(cfg: &ModelConfig, seed: u64) -> Result<ModelParams<f64>> {
    let mut rng = SeededRng::new(seed);
    let mut set = ModelParams::<f64>::init(cfg, &mut rng).into_param_set();
    for (_, t) in set.iter_mut() {
        t.data_mut().iter_mut().for_each(|v| *v = rng.uniform_range(-0.8, 0.8));
    }
    ModelParams::from_param_set(&set, cfg)
}

/// Compares the analytic gradient of the training-mode loss on `scene` with numeric
/// differences. Dropout masks are replayed from `mask_seed` on every evaluation.
pub fn check_scene_gradients(
    cfg: &ModelConfig,
    params: &ModelParams<f64>,
    scene: &Scene<f64>,
    provider: Option<&ContextProvider<f64>>,
    mask_seed: u64,
) -> Result<GradDiscrepancy<f64>> {
    let (_, grads) = scene_loss_and_grad(params, cfg, scene, provider, Mode::Train, &mut SeededRng::new(mask_seed))?;
    let loss = |s: &ParamSet<f64>| {
        ModelParams::from_param_set(s, cfg)
            .and_then(|p| scene_loss(&p, cfg, scene, provider, Mode::Train, &mut SeededRng::new(mask_seed)))
            .unwrap_or(f64::NAN)
    };
    let numeric = finite_diff_grad_extrapolated(loss, &params.clone().into_param_set(), GRADCHECK_STEP)?;
    compare_grads(&grads.into_param_set(), &numeric)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckCase {
    pub variant: Variant,
    pub seed: u64,
    pub persons: usize,
    pub worst: GradDiscrepancy<f64>,
}

impl GradCheckCase {
    pub fn passed(&self) -> bool {
        self.worst.max_relative_error <= GRADCHECK_TOLERANCE
    }
}

impl fmt::Display for GradCheckCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} seed {} persons {}: max relative error {:.3e} at {}[{}]",
            self.variant, self.seed, self.persons, self.worst.max_relative_error, self.worst.parameter, self.worst.index
        )
    }
}

/// Runs every variant on `count` seeds starting at `first_seed`. The seed picks the
/// parameters, the scene, the dropout masks and a person count in 1..=3.
pub fn gradient_suite(first_seed: u64, count: u64) -> Result<Vec<GradCheckCase>> {
    let provider = ContextProvider::SceneMean { dim: 3 };
    let mut cases = Vec::new();
    for v in Variant::ALL {
        let cfg = toy_config(v);
        for seed in first_seed..first_seed.wrapping_add(count) {
            let persons = 1 + (seed % 3) as usize;
            let params = toy_params(&cfg, seed.wrapping_mul(31).wrapping_add(7))?;
            let scene = toy_scene(seed, persons)?;
            let worst = check_scene_gradients(&cfg, &params, &scene, Some(&provider), seed)?;
            cases.push(GradCheckCase {
                variant: v,
                seed,
                persons,
                worst,
            });
        }
    }
    Ok(cases)
}
