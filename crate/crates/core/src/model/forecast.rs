//! Full model: per-person encoding, social pooling, context projection, conditioned
//! decoding, and the offset loss with its hand-written reverse pass.

use crate::data::{accumulate_offsets, Pose, PoseSequence, Scene};
use crate::error::{Error, Result};
use crate::eval::baselines::compose_local_pose_window;
use crate::eval::{PersonPrediction, ScenePrediction};
use crate::model::config::ModelConfig;
use crate::model::params::ModelParams;
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::seq2seq::{decode_backward, decode_forward, encode_backward, encode_forward, DecodeTrace, EncodeTrace};
use crate::social::context::{dropout_mask, MlpTrace};
use crate::social::{social_pool, social_pool_backward, ContextProvider, Mode};

/// Model inputs for one scene, taken from its first `obs_frames` frames.
pub(crate) struct Prepared<T> {
    ids: Vec<String>,
    /// Per person, `obs_frames − 1` flattened offsets (centered for local variants).
    inputs: Vec<Vec<Vec<T>>>,
    /// Per person, the pose the forecast offsets accumulate onto.
    anchors: Vec<Pose<T>>,
    observed: Vec<PoseSequence<T>>,
    /// Per person, the `pred_frames` ground-truth offsets when the scene is long enough.
    targets: Option<Vec<Vec<Vec<T>>>>,
    context_raw: Option<Vec<T>>,
    /// Person indices in ascending id order; pooling reduces in this order.
    by_id: Vec<usize>,
    root: usize,
    frame_rate: f64,
}

fn flat_diffs<T: Scalar>(frames: &[Pose<T>]) -> Vec<Vec<T>> {
    frames
        .windows(2)
        .map(|w| w[1].coords().iter().zip(w[0].coords()).map(|(&b, &a)| b - a).collect())
        .collect()
}

pub(crate) fn prepare<T: Scalar>(
    scene: &Scene<T>,
    cfg: &ModelConfig,
    provider: Option<&ContextProvider<T>>,
    need_targets: bool,
) -> Result<Prepared<T>> {
    if scene.num_joints() != cfg.joints || scene.dims() != cfg.dims {
        return Err(Error::InvalidArgument(format!(
            "scene {} has {} joints in {}D, model expects {} joints in {}D",
            scene.id(),
            scene.num_joints(),
            scene.dims(),
            cfg.joints,
            cfg.dims
        )));
    }
    let total = cfg.obs_frames + cfg.pred_frames;
    if scene.num_frames() < cfg.obs_frames || (need_targets && scene.num_frames() < total) {
        return Err(Error::InvalidArgument(format!(
            "scene {} has {} frames, need {}",
            scene.id(),
            scene.num_frames(),
            if need_targets { total } else { cfg.obs_frames }
        )));
    }
    let root = scene.root_joint();
    let with_targets = scene.num_frames() >= total;
    let mut prep = Prepared {
        ids: Vec::new(),
        inputs: Vec::new(),
        anchors: Vec::new(),
        observed: Vec::new(),
        targets: with_targets.then(Vec::new),
        context_raw: None,
        by_id: Vec::new(),
        root,
        frame_rate: scene.frame_rate(),
    };
    for person in scene.persons() {
        let track = person.track();
        let span = if with_targets { total } else { cfg.obs_frames };
        let window = track.slice(0, span)?;
        let frames = if cfg.variant.is_local() {
            window.centered(root)?.0
        } else {
            window
        };
        let f = frames.frames();
        prep.ids.push(person.id().to_string());
        prep.inputs.push(flat_diffs(&f[..cfg.obs_frames]));
        prep.anchors.push(f[cfg.obs_frames - 1].clone());
        prep.observed.push(track.slice(0, cfg.obs_frames)?);
        if let Some(t) = prep.targets.as_mut() {
            t.push(flat_diffs(&f[cfg.obs_frames - 1..total]));
        }
    }
    let mut by_id: Vec<usize> = (0..prep.ids.len()).collect();
    by_id.sort_by(|&a, &b| prep.ids[a].cmp(&prep.ids[b]));
    prep.by_id = by_id;

    if cfg.variant.has_context() {
        let provider = provider.ok_or_else(|| {
            Error::Config(format!("variant {} needs a context provider", cfg.variant))
        })?;
        if provider.dim() != cfg.context_raw_dim {
            return Err(Error::Config(format!(
                "context provider has dimension {}, model expects {}",
                provider.dim(),
                cfg.context_raw_dim
            )));
        }
        prep.context_raw = Some(provider.raw_features(scene, cfg.obs_frames)?);
    }
    Ok(prep)
}

pub(crate) struct Trace<T> {
    encoders: Vec<EncodeTrace<T>>,
    decoders: Vec<DecodeTrace<T>>,
    embeddings: Vec<Vec<T>>,
    context: Option<MlpTrace<T>>,
}

/// Forecast offsets for every person, `[person][step][coord]`.
pub(crate) fn forward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    prep: &Prepared<T>,
    mask: Option<Vec<T>>,
) -> (Vec<Vec<Vec<T>>>, Trace<T>) {
    let mut encoders = Vec::with_capacity(prep.inputs.len());
    let mut embeddings = Vec::with_capacity(prep.inputs.len());
    for inputs in &prep.inputs {
        let (h, tr) = encode_forward(inputs, &params.encoder);
        embeddings.push(h);
        encoders.push(tr);
    }

    let social = if cfg.variant.has_social() {
        let sorted: Vec<&[T]> = prep.by_id.iter().map(|&i| embeddings[i].as_slice()).collect();
        social_pool(&sorted, cfg.pooling).expect("embeddings share one width").0
    } else {
        vec![T::zero(); cfg.hidden]
    };

    let (context, context_trace) = match (&params.context, &prep.context_raw) {
        (Some(mlp), Some(raw)) => {
            let (c, tr) = mlp.forward_masked(raw, mask);
            (c, Some(tr))
        }
        _ => (Vec::new(), None),
    };

    let mut preds = Vec::with_capacity(prep.inputs.len());
    let mut decoders = Vec::with_capacity(prep.inputs.len());
    for (h, inputs) in embeddings.iter().zip(&prep.inputs) {
        let mut init = Vec::with_capacity(cfg.decoder_hidden());
        init.extend_from_slice(h);
        init.extend_from_slice(&social);
        init.extend_from_slice(&context);
        let last = inputs.last().expect("at least one observed offset");
        let (p, tr) = decode_forward(&init, last, cfg.pred_frames, &params.decoder, &params.output);
        preds.push(p);
        decoders.push(tr);
    }
    (
        preds,
        Trace {
            encoders,
            decoders,
            embeddings,
            context: context_trace,
        },
    )
}

pub(crate) fn backward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    prep: &Prepared<T>,
    trace: &Trace<T>,
    d_preds: &[Vec<Vec<T>>],
) -> ModelParams<T> {
    let k = cfg.hidden;
    let mut grads = ModelParams::zeros(cfg);
    let mut d_social = vec![T::zero(); k];
    let mut d_context = vec![T::zero(); cfg.decoder_hidden() - 2 * k];
    let mut d_embeddings = Vec::with_capacity(d_preds.len());
    for (d, tr) in d_preds.iter().zip(&trace.decoders) {
        let d_init = decode_backward(d, tr, &params.decoder, &params.output, &mut grads.decoder, &mut grads.output);
        d_embeddings.push(d_init[..k].to_vec());
        for (a, &b) in d_social.iter_mut().zip(&d_init[k..2 * k]) {
            *a += b;
        }
        for (a, &b) in d_context.iter_mut().zip(&d_init[2 * k..]) {
            *a += b;
        }
    }
    if cfg.variant.has_social() {
        let sorted: Vec<&[T]> = prep.by_id.iter().map(|&i| trace.embeddings[i].as_slice()).collect();
        let d_sorted = social_pool_backward(&sorted, cfg.pooling, &d_social).expect("shapes checked in forward");
        for (&i, d) in prep.by_id.iter().zip(d_sorted) {
            for (a, b) in d_embeddings[i].iter_mut().zip(d) {
                *a += b;
            }
        }
    }
    for (d, tr) in d_embeddings.iter().zip(&trace.encoders) {
        encode_backward(d, tr, &params.encoder, &mut grads.encoder);
    }
    if let (Some(mlp), Some(tr), Some(g)) = (&params.context, &trace.context, grads.context.as_mut()) {
        mlp.backward(&d_context, tr, g);
    }
    grads
}

fn check_loss_shapes<T>(pred: &[Vec<Vec<T>>], gt: &[Vec<Vec<T>>]) -> Result<usize> {
    let shape = |x: &[Vec<Vec<T>>]| {
        vec![
            x.len(),
            x.first().map_or(0, Vec::len),
            x.first().and_then(|p| p.first()).map_or(0, Vec::len),
        ]
    };
    let ragged = |x: &[Vec<Vec<T>>], s: &[usize]| x.iter().any(|p| p.len() != s[1] || p.iter().any(|v| v.len() != s[2]));
    let (a, b) = (shape(pred), shape(gt));
    if a != b || ragged(pred, &a) || ragged(gt, &b) {
        return Err(Error::Shape {
            op: "joint_loss",
            left: a,
            right: b,
        });
    }
    let count = a.iter().product::<usize>();
    if count == 0 {
        return Err(Error::InvalidArgument("joint_loss on empty offsets".into()));
    }
    Ok(count)
}

/// Mean squared offset error over persons × steps × coordinates.
pub fn joint_loss<T: Scalar>(pred: &[Vec<Vec<T>>], gt: &[Vec<Vec<T>>]) -> Result<T> {
    let count = check_loss_shapes(pred, gt)?;
    let mut sum = T::zero();
    for (p, g) in pred.iter().zip(gt) {
        for (ps, gs) in p.iter().zip(g) {
            for (&a, &b) in ps.iter().zip(gs) {
                sum += (a - b) * (a - b);
            }
        }
    }
    Ok(sum / T::from_usize_exact(count))
}

fn joint_loss_grad<T: Scalar>(pred: &[Vec<Vec<T>>], gt: &[Vec<Vec<T>>]) -> Vec<Vec<Vec<T>>> {
    let count: usize = pred.iter().map(|p| p.iter().map(Vec::len).sum::<usize>()).sum();
    let scale = T::lit(2.0) / T::from_usize_exact(count);
    pred.iter()
        .zip(gt)
        .map(|(p, g)| {
            p.iter()
                .zip(g)
                .map(|(ps, gs)| ps.iter().zip(gs).map(|(&a, &b)| scale * (a - b)).collect())
                .collect()
        })
        .collect()
}

fn draw_mask<T: Scalar>(cfg: &ModelConfig, mode: Mode, rng: &mut SeededRng) -> Option<Vec<T>> {
    match mode {
        Mode::Train if cfg.variant.has_context() => Some(dropout_mask(cfg.context_hidden_dim(), cfg.dropout, rng)),
        _ => None,
    }
}

fn targets<T>(prep: &Prepared<T>) -> Result<&[Vec<Vec<T>>]> {
    prep.targets
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("scene too short for a loss".into()))
}

/// Loss of the forecast for `scene` (its first `obs_frames + pred_frames` frames).
/// Training mode draws a context dropout mask from `rng`.
pub fn scene_loss<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    scene: &Scene<T>,
    provider: Option<&ContextProvider<T>>,
    mode: Mode,
    rng: &mut SeededRng,
) -> Result<T> {
    let prep = prepare(scene, cfg, provider, true)?;
    let (preds, _) = forward(params, cfg, &prep, draw_mask(cfg, mode, rng));
    joint_loss(&preds, targets(&prep)?)
}

/// [`scene_loss`] and its gradient with respect to every parameter.
pub fn scene_loss_and_grad<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    scene: &Scene<T>,
    provider: Option<&ContextProvider<T>>,
    mode: Mode,
    rng: &mut SeededRng,
) -> Result<(T, ModelParams<T>)> {
    let prep = prepare(scene, cfg, provider, true)?;
    let (preds, trace) = forward(params, cfg, &prep, draw_mask(cfg, mode, rng));
    let gt = targets(&prep)?;
    let loss = joint_loss(&preds, gt)?;
    let grads = backward(params, cfg, &prep, &trace, &joint_loss_grad(&preds, gt));
    Ok((loss, grads))
}

/// Forecasts every person of `observed` (only its first `obs_frames` frames are read).
/// Evaluation mode: no dropout, fully deterministic.
pub fn forecast_scene<T: Scalar>(
    observed: &Scene<T>,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    provider: Option<&ContextProvider<T>>,
) -> Result<ScenePrediction<T>> {
    let prep = prepare(observed, cfg, provider, false)?;
    let (preds, _) = forward(params, cfg, &prep, None);
    let mut persons = Vec::with_capacity(preds.len());
    for (i, offsets) in preds.into_iter().enumerate() {
        if offsets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("forecast for person {}", prep.ids[i])));
        }
        let abs_last = prep.observed[i].last();
        let p = if cfg.variant.is_local() {
            let centered: Vec<Pose<T>> = accumulate_offsets(&prep.anchors[i], &offsets)?
                .into_iter()
                .map(|f| {
                    // the model is free to move the root; pin it back to the origin
                    let r: Vec<T> = f.joint(prep.root).iter().map(|&v| -v).collect();
                    f.translated(&r)
                })
                .collect();
            let local = PoseSequence::new(centered, prep.frame_rate)?;
            let global = compose_local_pose_window(&local, &prep.observed[i], prep.root, cfg.local_motion, cfg.velocity_window)?;
            PersonPrediction::from_poses(&prep.ids[i], abs_last, global)?
        } else {
            PersonPrediction::from_offsets(&prep.ids[i], abs_last, offsets, prep.frame_rate)?
        };
        persons.push(p);
    }
    Ok(ScenePrediction {
        scene_id: observed.id().to_string(),
        persons,
    })
}

/// A configuration bundled with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Forecaster<T> {
    pub config: ModelConfig,
    pub params: ModelParams<T>,
}

impl<T: Scalar> Forecaster<T> {
    pub fn new(config: ModelConfig, params: ModelParams<T>) -> Result<Self> {
        config.validate()?;
        let set = params.clone().into_param_set();
        ModelParams::from_param_set(&set, &config)?;
        Ok(Forecaster { config, params })
    }

    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::init(&config, &mut SeededRng::new(config.seed));
        Ok(Forecaster { config, params })
    }

    pub fn forecast(&self, observed: &Scene<T>, provider: Option<&ContextProvider<T>>) -> Result<ScenePrediction<T>> {
        forecast_scene(observed, &self.params, &self.config, provider)
    }

    /// Evaluation-mode loss on one scene.
    pub fn loss(&self, scene: &Scene<T>, provider: Option<&ContextProvider<T>>) -> Result<T> {
        scene_loss(&self.params, &self.config, scene, provider, Mode::Eval, &mut SeededRng::new(0))
    }
}
