use crate::data::{accumulate_offsets, Pose, PoseSequence, Scene, SceneBuilder};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One person's forecast: absolute future poses and the offsets between consecutive
/// frames, the first measured from the last observed pose.
#[derive(Clone, Debug, PartialEq)]
pub struct PersonPrediction<T> {
    pub id: String,
    pub poses: PoseSequence<T>,
    pub offsets: Vec<Vec<T>>,
}

impl<T: Scalar> PersonPrediction<T> {
    /// Builds the absolute frames by accumulating `offsets` onto `last_observed`.
    pub fn from_offsets(id: impl Into<String>, last_observed: &Pose<T>, offsets: Vec<Vec<T>>, frame_rate: f64) -> Result<Self> {
        let frames = accumulate_offsets(last_observed, &offsets)?;
        Ok(PersonPrediction {
            id: id.into(),
            poses: PoseSequence::new(frames, frame_rate)?,
            offsets,
        })
    }

    /// Derives offsets from absolute frames.
    pub fn from_poses(id: impl Into<String>, last_observed: &Pose<T>, poses: PoseSequence<T>) -> Result<Self> {
        let mut prev = last_observed;
        let mut offsets = Vec::with_capacity(poses.len());
        for f in poses.frames() {
            if !f.same_layout(prev) {
                return Err(Error::Shape {
                    op: "prediction frames",
                    left: vec![prev.num_joints(), prev.dims()],
                    right: vec![f.num_joints(), f.dims()],
                });
            }
            offsets.push(f.coords().iter().zip(prev.coords()).map(|(&b, &a)| b - a).collect());
            prev = f;
        }
        Ok(PersonPrediction {
            id: id.into(),
            poses,
            offsets,
        })
    }
}

/// Forecasts for every person of a scene, in the scene's person order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenePrediction<T> {
    pub scene_id: String,
    pub persons: Vec<PersonPrediction<T>>,
}

impl<T: Scalar> ScenePrediction<T> {
    pub fn num_frames(&self) -> usize {
        self.persons.first().map_or(0, |p| p.poses.len())
    }

    pub fn person(&self, id: &str) -> Option<&PersonPrediction<T>> {
        self.persons.iter().find(|p| p.id == id)
    }

    /// Packs the forecast as a scene in the canonical format, reusing `template`'s
    /// metadata (joint names, root, frame rate). Context is dropped.
    pub fn to_scene(&self, template: &Scene<T>) -> Result<Scene<T>> {
        let mut b: SceneBuilder<T> = template.to_builder();
        b.context_raw = None;
        b.persons = self
            .persons
            .iter()
            .map(|p| (p.id.clone(), p.poses.frames().to_vec()))
            .collect();
        b.build()
    }
}
