use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::params::ParamSet;
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::seq2seq::{GruParams, Linear};
use crate::social::ContextMlp;

/// Every learnable tensor of the forecaster.
///
/// Canonical names: `encoder.*`, `decoder.*` (GRU gates), `output.weight|bias`
/// (decoder state to offsets) and, for context variants, `context.hidden.*`,
/// `context.output.*`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub encoder: GruParams<T>,
    pub decoder: GruParams<T>,
    pub output: Linear<T>,
    pub context: Option<ContextMlp<T>>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let w = cfg.width();
        ModelParams {
            encoder: GruParams::zeros(w, cfg.hidden),
            decoder: GruParams::zeros(w, cfg.decoder_hidden()),
            output: Linear::zeros(cfg.decoder_hidden(), w),
            context: cfg
                .variant
                .has_context()
                .then(|| ContextMlp::zeros(cfg.context_raw_dim, cfg.context_hidden_dim(), cfg.context_dim)),
        }
    }

    /// Uniform `±1/√fan_in` weights and zero biases, drawn in a fixed order from `rng`.
    pub fn init(cfg: &ModelConfig, rng: &mut SeededRng) -> Self {
        let w = cfg.width();
        let hd = cfg.decoder_hidden();
        ModelParams {
            encoder: GruParams::init(w, cfg.hidden, rng),
            decoder: GruParams::init(w, hd, rng),
            output: Linear::init(hd, w, rng),
            context: cfg
                .variant
                .has_context()
                .then(|| ContextMlp::init(cfg.context_raw_dim, cfg.context_hidden_dim(), cfg.context_dim, rng)),
        }
    }

    pub fn into_param_set(self) -> ParamSet<T> {
        let mut set = ParamSet::new();
        // names are distinct by construction
        self.encoder.insert_into("encoder", &mut set).expect("unique names");
        self.decoder.insert_into("decoder", &mut set).expect("unique names");
        self.output.insert_into("output", &mut set).expect("unique names");
        if let Some(c) = self.context {
            c.insert_into("context", &mut set).expect("unique names");
        }
        set
    }

    /// Rebuilds from a set whose names and shapes must match `cfg`'s inventory exactly.
    pub fn from_param_set(set: &ParamSet<T>, cfg: &ModelConfig) -> Result<Self> {
        let expected = Self::inventory(cfg);
        for (name, shape) in &expected {
            let t = set
                .get(name)
                .map_err(|_| Error::Params(format!("missing parameter {name} required by the configuration")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Params(format!(
                    "parameter {name} has shape {:?}, configuration expects {shape:?}",
                    t.shape()
                )));
            }
        }
        if let Some(extra) = set.names().find(|n| !expected.iter().any(|(e, _)| e == n)) {
            return Err(Error::Params(format!("unexpected parameter {extra} for this configuration")));
        }
        let mut s = set.clone();
        Ok(ModelParams {
            encoder: GruParams::take_from("encoder", &mut s)?,
            decoder: GruParams::take_from("decoder", &mut s)?,
            output: Linear::take_from("output", &mut s)?,
            context: if cfg.variant.has_context() {
                Some(ContextMlp::take_from("context", &mut s)?)
            } else {
                None
            },
        })
    }

    /// `(name, shape)` for every parameter `cfg` calls for, in canonical order.
    pub fn inventory(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
        ModelParams::<f64>::zeros(cfg)
            .into_param_set()
            .iter()
            .map(|(n, t)| (n.to_string(), t.shape().to_vec()))
            .collect()
    }

    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        self.encoder.accumulate(&other.encoder)?;
        self.decoder.accumulate(&other.decoder)?;
        self.output.accumulate(&other.output)?;
        match (&mut self.context, &other.context) {
            (Some(a), Some(b)) => a.accumulate(b),
            (None, None) => Ok(()),
            _ => Err(Error::Params("context branch present in only one parameter set".into())),
        }
    }

    pub fn num_values(&self) -> usize {
        self.clone().into_param_set().num_values()
    }
}
