//! Global-coordinate pose error.
//!
//! The primary metric at a future frame is the Euclidean norm of the difference
//! between the stacked `L·D` pose vectors (unsquared), averaged over persons.
//! The alternative averages per-joint Euclidean distances instead of stacking.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ms_to_frame, Pose, Scene};
use crate::error::{Error, Result};
use crate::eval::prediction::ScenePrediction;
use crate::eval::report::{HorizonReport, HorizonRow};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `‖stack(x) − stack(x̂)‖₂` over all joints at once.
    #[default]
    StackedL2,
    /// Mean over joints of `‖x_l − x̂_l‖₂`.
    PerJointL2,
}

impl MetricKind {
    pub fn tag(self) -> &'static str {
        match self {
            MetricKind::StackedL2 => "stacked_l2",
            MetricKind::PerJointL2 => "per_joint_l2",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stacked_l2" => Ok(MetricKind::StackedL2),
            "per_joint_l2" => Ok(MetricKind::PerJointL2),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric {other:?} (expected stacked_l2 or per_joint_l2)"
            ))),
        }
    }
}

pub fn pose_distance<T: Scalar>(a: &Pose<T>, b: &Pose<T>, kind: MetricKind) -> Result<T> {
    if !a.same_layout(b) {
        return Err(Error::Shape {
            op: "pose_distance",
            left: vec![a.num_joints(), a.dims()],
            right: vec![b.num_joints(), b.dims()],
        });
    }
    let sq = |x: &[T], y: &[T]| x.iter().zip(y).map(|(&p, &q)| (p - q) * (p - q)).sum::<T>();
    Ok(match kind {
        MetricKind::StackedL2 => sq(a.coords(), b.coords()).sqrt(),
        MetricKind::PerJointL2 => {
            let total: T = (0..a.num_joints()).map(|j| sq(a.joint(j), b.joint(j)).sqrt()).sum();
            total / T::from_usize_exact(a.num_joints())
        }
    })
}

/// Per-frame metric for one scene: entry `k` is frame `k+1` of the forecast, averaged
/// over persons. Persons are matched by id; `gt_future` must hold exactly the forecast frames.
pub fn scene_metric_curve<T: Scalar>(pred: &ScenePrediction<T>, gt_future: &Scene<T>, kind: MetricKind) -> Result<Vec<T>> {
    if pred.persons.len() != gt_future.num_persons() {
        return Err(Error::InvalidArgument(format!(
            "prediction has {} persons, ground truth {}",
            pred.persons.len(),
            gt_future.num_persons()
        )));
    }
    let frames = pred.num_frames();
    if frames != gt_future.num_frames() {
        return Err(Error::InvalidArgument(format!(
            "prediction has {frames} frames, ground truth {}",
            gt_future.num_frames()
        )));
    }
    let mut curve = vec![T::zero(); frames];
    for gt in gt_future.persons() {
        let p = pred
            .person(gt.id())
            .ok_or_else(|| Error::InvalidArgument(format!("prediction lacks person {:?}", gt.id())))?;
        for (k, (a, b)) in p.poses.frames().iter().zip(gt.track().frames()).enumerate() {
            curve[k] += pose_distance(a, b, kind)?;
        }
    }
    let n = T::from_usize_exact(gt_future.num_persons());
    curve.iter_mut().for_each(|v| *v /= n);
    Ok(curve)
}

/// Frame indices (1-based) for millisecond horizons; errors on a horizon past `pred_frames`.
pub fn horizon_frames(horizons_ms: &[f64], frame_rate: f64, pred_frames: usize) -> Result<Vec<usize>> {
    horizons_ms
        .iter()
        .map(|&ms| {
            let f = ms_to_frame(ms, frame_rate)?;
            if f > pred_frames {
                return Err(Error::InvalidArgument(format!(
                    "horizon {ms} ms is frame {f}, beyond the {pred_frames}-frame prediction window"
                )));
            }
            Ok(f)
        })
        .collect()
}

/// Report rows for one method on one scene.
pub fn global_metric<T: Scalar>(
    method: &str,
    pred: &ScenePrediction<T>,
    gt_future: &Scene<T>,
    horizons_ms: &[f64],
    kind: MetricKind,
) -> Result<HorizonReport> {
    let frames = horizon_frames(horizons_ms, gt_future.frame_rate(), pred.num_frames())?;
    let curve = scene_metric_curve(pred, gt_future, kind)?;
    let mut report = HorizonReport::new(kind);
    for (&ms, &f) in horizons_ms.iter().zip(&frames) {
        report.rows.push(HorizonRow {
            method: method.to_string(),
            horizon_ms: ms,
            frame_index: f,
            metric: curve[f - 1].as_f64(),
        });
    }
    Ok(report)
}
