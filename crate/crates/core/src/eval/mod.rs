//! Baselines, metrics and dataset-level evaluation.

pub mod baselines;
pub mod metrics;
pub mod prediction;
pub mod report;

pub use baselines::{
    compose_local_pose, constant_pose_constant_motion, local_pose_frozen, zero_pose_constant_motion,
    zero_pose_zero_motion, Baseline, MotionRule,
};
pub use metrics::{global_metric, horizon_frames, pose_distance, scene_metric_curve, MetricKind};
pub use prediction::{PersonPrediction, ScenePrediction};
pub use report::{curve_csv, grouped_csv, GroupRow, HorizonReport, HorizonRow};

use std::collections::BTreeMap;

use crate::data::Scene;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Horizons reported by default, in milliseconds.
pub const DEFAULT_HORIZONS_MS: [f64; 5] = [80.0, 160.0, 320.0, 400.0, 560.0];

/// Runs a baseline on every person of an observed scene.
pub fn baseline_prediction<T: Scalar>(
    baseline: Baseline,
    observed: &Scene<T>,
    t_pred: usize,
    window: usize,
) -> Result<ScenePrediction<T>> {
    let persons = observed
        .persons()
        .iter()
        .map(|p| {
            let poses = baseline.predict(p.track(), t_pred, observed.root_joint(), window)?;
            PersonPrediction::from_poses(p.id(), p.track().last(), poses)
        })
        .collect::<Result<_>>()?;
    Ok(ScenePrediction {
        scene_id: observed.id().to_string(),
        persons,
    })
}

/// A named forecaster: maps the observed part of a scene to a forecast.
pub struct Method<'a, T> {
    pub name: String,
    pub predict: Box<dyn Fn(&Scene<T>, usize) -> Result<ScenePrediction<T>> + Sync + 'a>,
}

impl<'a, T: Scalar> Method<'a, T> {
    pub fn new(name: impl Into<String>, f: impl Fn(&Scene<T>, usize) -> Result<ScenePrediction<T>> + Sync + 'a) -> Self {
        Method {
            name: name.into(),
            predict: Box::new(f),
        }
    }

    pub fn baseline(b: Baseline, window: usize) -> Self {
        Method::new(b.name(), move |s, t| baseline_prediction(b, s, t, window))
    }
}

/// Per-frame metric curves for one method.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodCurves {
    pub method: String,
    /// `(scene id, group, curve)` in input order.
    pub per_scene: Vec<(String, String, Vec<f64>)>,
}

impl MethodCurves {
    /// Mean over scenes at each frame.
    pub fn mean(&self) -> Vec<f64> {
        mean_curve(self.per_scene.iter().map(|(_, _, c)| c.as_slice()))
    }
}

fn mean_curve<'a>(curves: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for c in curves {
        if sum.is_empty() {
            sum = vec![0.0; c.len()];
        }
        for (s, v) in sum.iter_mut().zip(c) {
            *s += v;
        }
        n += 1;
    }
    sum.iter().map(|s| s / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub metric: MetricKind,
    pub frame_rate: f64,
    pub pred_frames: usize,
    pub methods: Vec<MethodCurves>,
}

impl Evaluation {
    pub fn method(&self, name: &str) -> Option<&MethodCurves> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn horizon_report(&self, horizons_ms: &[f64]) -> Result<HorizonReport> {
        let frames = horizon_frames(horizons_ms, self.frame_rate, self.pred_frames)?;
        let mut report = HorizonReport::new(self.metric);
        for m in &self.methods {
            let mean = m.mean();
            for (&ms, &f) in horizons_ms.iter().zip(&frames) {
                report.rows.push(HorizonRow {
                    method: m.method.clone(),
                    horizon_ms: ms,
                    frame_index: f,
                    metric: mean[f - 1],
                });
            }
        }
        Ok(report)
    }

    /// Horizon rows broken down by scene group (scene id up to its last `_`).
    pub fn grouped_rows(&self, horizons_ms: &[f64]) -> Result<Vec<GroupRow>> {
        let frames = horizon_frames(horizons_ms, self.frame_rate, self.pred_frames)?;
        let mut rows = Vec::new();
        for m in &self.methods {
            let mut groups: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
            for (_, g, c) in &m.per_scene {
                groups.entry(g.as_str()).or_default().push(c);
            }
            for (g, curves) in groups {
                let mean = mean_curve(curves.into_iter());
                for (&ms, &f) in horizons_ms.iter().zip(&frames) {
                    rows.push(GroupRow {
                        group: g.to_string(),
                        row: HorizonRow {
                            method: m.method.clone(),
                            horizon_ms: ms,
                            frame_index: f,
                            metric: mean[f - 1],
                        },
                    });
                }
            }
        }
        Ok(rows)
    }
}

/// Scores every method on every scene. Each scene is cut into its first `obs_frames`
/// frames (the only part a method sees) and the following `pred_frames` frames (ground
/// truth). Scenes are spread over `workers` threads; results do not depend on the count.
pub fn evaluate_dataset<T: Scalar>(
    scenes: &[Scene<T>],
    obs_frames: usize,
    pred_frames: usize,
    methods: &[Method<'_, T>],
    metric: MetricKind,
    workers: usize,
) -> Result<Evaluation> {
    let first = scenes
        .first()
        .ok_or_else(|| Error::InvalidArgument("evaluation needs at least one scene".into()))?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("evaluation needs at least one method".into()));
    }
    let score = |scene: &Scene<T>| -> Result<Vec<Vec<f64>>> {
        let window = scene.window(0, obs_frames + pred_frames).map_err(|e| {
            Error::InvalidArgument(format!("scene {}: {e}", scene.id()))
        })?;
        let (observed, future) = window.split_at(obs_frames)?;
        methods
            .iter()
            .map(|m| {
                let pred = (m.predict)(&observed, pred_frames)
                    .map_err(|e| annotate(e, &format!("method {} on scene {}", m.name, scene.id())))?;
                Ok(scene_metric_curve(&pred, &future, metric)?.iter().map(|v| v.as_f64()).collect())
            })
            .collect()
    };

    let workers = workers.clamp(1, scenes.len());
    let chunk = scenes.len().div_ceil(workers);
    let results: Vec<Result<Vec<Vec<f64>>>> = if workers == 1 {
        scenes.iter().map(score).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = scenes
                .chunks(chunk)
                .map(|part| s.spawn(|| part.iter().map(score).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("evaluation worker panicked"))
                .collect()
        })
    };

    let mut out: Vec<MethodCurves> = methods
        .iter()
        .map(|m| MethodCurves {
            method: m.name.clone(),
            per_scene: Vec::with_capacity(scenes.len()),
        })
        .collect();
    for (scene, r) in scenes.iter().zip(results) {
        for (m, curve) in out.iter_mut().zip(r?) {
            m.per_scene.push((scene.id().to_string(), scene.group().to_string(), curve));
        }
    }
    Ok(Evaluation {
        metric,
        frame_rate: first.frame_rate(),
        pred_frames,
        methods: out,
    })
}

fn annotate(e: Error, context: &str) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{context}: {m}")),
        other => other,
    }
}
