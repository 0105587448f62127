//! Mini-batch Adam over scenes with per-epoch learning-rate decay and early stopping.

use std::fmt::Write as _;

use crate::data::Scene;
use crate::error::{Error, Result};
use crate::model::checkpoint::Checkpoint;
use crate::model::config::ModelConfig;
use crate::model::forecast::{scene_loss, scene_loss_and_grad};
use crate::model::params::ModelParams;
use crate::optim::{adam_update, AdamState};
use crate::params::ParamSet;
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::social::{ContextProvider, Mode};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training-mode loss over the epoch's scenes.
    pub train_loss: f64,
    /// Mean evaluation-mode loss on the validation scenes after the epoch.
    pub val_loss: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss,lr";

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = format!("{HISTORY_HEADER}\n");
    for r in history {
        let _ = writeln!(s, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.lr);
    }
    s
}

/// Optimizer state around a parameter set. Owns the random streams for batch order
/// and dropout so a run is reproducible from `config.seed` alone.
pub struct Trainer<'a, T> {
    config: ModelConfig,
    params: ParamSet<T>,
    adam: AdamState<T>,
    provider: Option<&'a ContextProvider<T>>,
    shuffle_rng: SeededRng,
    dropout_rng: SeededRng,
}

impl<'a, T: Scalar> Trainer<'a, T> {
    /// Fresh parameters drawn from `config.seed`.
    pub fn new(config: ModelConfig, provider: Option<&'a ContextProvider<T>>) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        let params = ModelParams::init(&config, &mut rng);
        Self::assemble(config, params, provider, rng)
    }

    /// Starts from given parameters; random streams still derive from `config.seed`.
    pub fn with_params(config: ModelConfig, params: ModelParams<T>, provider: Option<&'a ContextProvider<T>>) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        ModelParams::<T>::init(&config, &mut rng);
        Self::assemble(config, params, provider, rng)
    }

    fn assemble(
        config: ModelConfig,
        params: ModelParams<T>,
        provider: Option<&'a ContextProvider<T>>,
        mut rng: SeededRng,
    ) -> Result<Self> {
        let set = params.into_param_set();
        ModelParams::from_param_set(&set, &config)?;
        let adam = AdamState::new(&set);
        Ok(Trainer {
            config,
            params: set,
            adam,
            provider,
            shuffle_rng: rng.fork(),
            dropout_rng: rng.fork(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn param_set(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn model_params(&self) -> ModelParams<T> {
        ModelParams::from_param_set(&self.params, &self.config).expect("inventory fixed at construction")
    }

    pub fn steps_taken(&self) -> u64 {
        self.adam.step()
    }

    /// One Adam update on the mean gradient over `batch`. Returns the mean loss
    /// before the update.
    pub fn step(&mut self, batch: &[&Scene<T>], lr: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let params = self.model_params();
        let mut total = ModelParams::zeros(&self.config);
        let mut loss = 0.0;
        for scene in batch {
            let (l, g) = scene_loss_and_grad(&params, &self.config, scene, self.provider, Mode::Train, &mut self.dropout_rng)?;
            if !l.is_finite() {
                let ids: Vec<&str> = batch.iter().map(|s| s.id()).collect();
                return Err(Error::NonFinite(format!("training loss on batch [{}]", ids.join(", "))));
            }
            loss += l.as_f64();
            total.accumulate(&g)?;
        }
        let n = T::from_usize_exact(batch.len());
        let mut grads = total.into_param_set();
        for (_, t) in grads.iter_mut() {
            t.data_mut().iter_mut().for_each(|v| *v /= n);
        }
        adam_update(&mut self.params, &grads, &mut self.adam, T::lit(lr))?;
        Ok(loss / batch.len() as f64)
    }

    /// Evaluation-mode mean loss.
    pub fn mean_loss(&self, scenes: &[Scene<T>]) -> Result<f64> {
        mean_eval_loss(&self.model_params(), &self.config, scenes, self.provider)
    }

    /// One pass over `scenes` in a freshly shuffled order. Returns the mean batch loss
    /// weighted by batch size.
    pub fn epoch(&mut self, scenes: &[Scene<T>], lr: f64, epoch: usize) -> Result<f64> {
        let mut order: Vec<usize> = (0..scenes.len()).collect();
        self.shuffle_rng.shuffle(&mut order);
        let mut sum = 0.0;
        for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let batch: Vec<&Scene<T>> = chunk.iter().map(|&i| &scenes[i]).collect();
            let l = self.step(&batch, lr).map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("epoch {epoch} batch {}: {m}", b + 1)),
                other => other,
            })?;
            sum += l * batch.len() as f64;
        }
        Ok(sum / scenes.len() as f64)
    }
}

pub fn mean_eval_loss<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    scenes: &[Scene<T>],
    provider: Option<&ContextProvider<T>>,
) -> Result<f64> {
    if scenes.is_empty() {
        return Err(Error::InvalidArgument("no scenes to evaluate".into()));
    }
    let mut rng = SeededRng::new(0);
    let mut sum = 0.0;
    for s in scenes {
        let l = scene_loss(params, cfg, s, provider, Mode::Eval, &mut rng)?;
        if !l.is_finite() {
            return Err(Error::NonFinite(format!("validation loss on scene {}", s.id())));
        }
        sum += l.as_f64();
    }
    Ok(sum / scenes.len() as f64)
}

/// Trains from `config.seed` and returns the best-validation checkpoint.
pub fn train<T: Scalar>(
    train_scenes: &[Scene<T>],
    val_scenes: &[Scene<T>],
    config: &ModelConfig,
    provider: Option<&ContextProvider<T>>,
) -> Result<Checkpoint<T>> {
    train_with(train_scenes, val_scenes, config, provider, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<T: Scalar>(
    train_scenes: &[Scene<T>],
    val_scenes: &[Scene<T>],
    config: &ModelConfig,
    provider: Option<&ContextProvider<T>>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Checkpoint<T>> {
    if train_scenes.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    if val_scenes.is_empty() {
        return Err(Error::InvalidArgument("validation split is empty".into()));
    }
    let mut trainer = Trainer::new(config.clone(), provider)?;
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ParamSet<T>)> = None;
    let mut since_improve = 0usize;
    for epoch in 1..=config.max_epochs {
        let lr = config.lr * config.lr_decay.powi(epoch as i32 - 1);
        let train_loss = trainer.epoch(train_scenes, lr, epoch)?;
        let val_loss = trainer.mean_loss(val_scenes)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
        };
        on_epoch(&record);
        history.push(record);
        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, trainer.param_set().clone()));
            since_improve = 0;
        } else {
            since_improve += 1;
            if since_improve > config.patience {
                break;
            }
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch runs");
    Checkpoint::new(config.clone(), params, history, best_epoch)
}

/// Epoch at which early stopping halts for a sequence of validation losses, and the
/// best epoch. Mirrors the rule in [`train_with`].
pub fn early_stopping_outcome(val_losses: &[f64], patience: usize) -> (usize, usize) {
    let mut best = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since = 0;
    for (i, &v) in val_losses.iter().enumerate() {
        let epoch = i + 1;
        if best_epoch == 0 || v < best {
            best = v;
            best_epoch = epoch;
            since = 0;
        } else {
            since += 1;
            if since > patience {
                return (epoch, best_epoch);
            }
        }
    }
    (val_losses.len(), best_epoch)
}
