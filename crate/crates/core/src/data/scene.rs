use std::collections::BTreeSet;

use crate::data::pose::{Pose, PoseSequence};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A tracked individual: identifier plus absolute pose per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Person<T> {
    id: String,
    track: PoseSequence<T>,
}

impl<T: Scalar> Person<T> {
    pub fn new(id: impl Into<String>, track: PoseSequence<T>) -> Self {
        Person { id: id.into(), track }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn track(&self) -> &PoseSequence<T> {
        &self.track
    }
}

/// Everything needed to assemble a [`Scene`]; validation happens in [`SceneBuilder::build`].
#[derive(Clone, Debug)]
pub struct SceneBuilder<T> {
    pub scene_id: String,
    pub frame_rate: f64,
    pub dims: usize,
    pub joint_names: Vec<String>,
    pub root_joint: usize,
    pub persons: Vec<(String, Vec<Pose<T>>)>,
    pub context_raw: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> SceneBuilder<T> {
    pub fn build(self) -> Result<Scene<T>> {
        let SceneBuilder {
            scene_id,
            frame_rate,
            dims,
            joint_names,
            root_joint,
            persons,
            context_raw,
        } = self;
        if scene_id.is_empty() {
            return Err(Error::Scene("scene_id is empty".into()));
        }
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::Scene(format!("{scene_id}: frame_rate {frame_rate} must be positive")));
        }
        if !(2..=3).contains(&dims) {
            return Err(Error::Scene(format!("{scene_id}: dims must be 2 or 3, got {dims}")));
        }
        let joints = joint_names.len();
        if joints < 2 {
            return Err(Error::Scene(format!("{scene_id}: need at least 2 joints, got {joints}")));
        }
        if root_joint >= joints {
            return Err(Error::Scene(format!(
                "{scene_id}: root_joint {root_joint} out of range for {joints} joints"
            )));
        }
        if persons.is_empty() {
            return Err(Error::Scene(format!("{scene_id}: no persons")));
        }
        let mut seen = BTreeSet::new();
        let frames = persons[0].1.len();
        let mut built = Vec::with_capacity(persons.len());
        for (id, poses) in persons {
            if !seen.insert(id.clone()) {
                return Err(Error::Scene(format!("{scene_id}: duplicate person id {id:?}")));
            }
            if poses.len() != frames {
                return Err(Error::Scene(format!(
                    "{scene_id}: person {id:?} has {} frames, expected {frames}",
                    poses.len()
                )));
            }
            if let Some(t) = poses
                .iter()
                .position(|p| p.dims() != dims || p.num_joints() != joints)
            {
                return Err(Error::Scene(format!(
                    "{scene_id}: person {id:?} frame {t} has {} joints of {} dims, expected {joints} of {dims}",
                    poses[t].num_joints(),
                    poses[t].dims()
                )));
            }
            let track = PoseSequence::new(poses, frame_rate)
                .map_err(|e| Error::Scene(format!("{scene_id}: person {id:?}: {e}")))?;
            built.push(Person::new(id, track));
        }
        if let Some(ctx) = &context_raw {
            if ctx.len() != frames {
                return Err(Error::Scene(format!(
                    "{scene_id}: context_raw has {} entries, expected {frames}",
                    ctx.len()
                )));
            }
            let f = ctx[0].len();
            if f == 0 {
                return Err(Error::Scene(format!("{scene_id}: context_raw vectors are empty")));
            }
            if let Some(t) = ctx.iter().position(|c| c.len() != f) {
                return Err(Error::Scene(format!(
                    "{scene_id}: context_raw[{t}] has dimension {}, expected {f}",
                    ctx[t].len()
                )));
            }
            if ctx.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{scene_id}: context_raw")));
            }
        }
        Ok(Scene {
            scene_id,
            frame_rate,
            dims,
            joint_names,
            root_joint,
            persons: built,
            context_raw,
        })
    }
}

/// A multi-person clip. All persons are present in every frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T> {
    scene_id: String,
    frame_rate: f64,
    dims: usize,
    joint_names: Vec<String>,
    root_joint: usize,
    persons: Vec<Person<T>>,
    context_raw: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> Scene<T> {
    pub fn id(&self) -> &str {
        &self.scene_id
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn num_joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn root_joint(&self) -> usize {
        self.root_joint
    }

    pub fn persons(&self) -> &[Person<T>] {
        &self.persons
    }

    pub fn num_persons(&self) -> usize {
        self.persons.len()
    }

    pub fn num_frames(&self) -> usize {
        self.persons[0].track.len()
    }

    pub fn context_raw(&self) -> Option<&[Vec<T>]> {
        self.context_raw.as_deref()
    }

    /// Group label: the id up to its last `_`, e.g. `react_0003` → `react`.
    pub fn group(&self) -> &str {
        match self.scene_id.rfind('_') {
            Some(i) if i > 0 => &self.scene_id[..i],
            _ => &self.scene_id,
        }
    }

    pub fn to_builder(&self) -> SceneBuilder<T> {
        SceneBuilder {
            scene_id: self.scene_id.clone(),
            frame_rate: self.frame_rate,
            dims: self.dims,
            joint_names: self.joint_names.clone(),
            root_joint: self.root_joint,
            persons: self
                .persons
                .iter()
                .map(|p| (p.id.clone(), p.track.frames().to_vec()))
                .collect(),
            context_raw: self.context_raw.clone(),
        }
    }

    /// Frames `start..start + len` of every person (and the context sequence).
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.num_frames() {
            return Err(Error::InvalidArgument(format!(
                "{}: window {start}..{} outside {} frames",
                self.scene_id,
                start + len,
                self.num_frames()
            )));
        }
        let mut b = self.to_builder();
        for (_, frames) in &mut b.persons {
            *frames = frames[start..start + len].to_vec();
        }
        b.context_raw = b.context_raw.map(|c| c[start..start + len].to_vec());
        b.build()
    }

    /// Splits into the first `observed` frames and the remainder.
    pub fn split_at(&self, observed: usize) -> Result<(Self, Self)> {
        let total = self.num_frames();
        if observed == 0 || observed >= total {
            return Err(Error::InvalidArgument(format!(
                "{}: cannot split {total} frames at {observed}",
                self.scene_id
            )));
        }
        Ok((self.window(0, observed)?, self.window(observed, total - observed)?))
    }

    /// Reorders persons: new position `i` holds old person `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.num_persons();
        let mut check: Vec<usize> = order.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{n}")));
        }
        let mut b = self.to_builder();
        let old = std::mem::take(&mut b.persons);
        b.persons = order.iter().map(|&i| old[i].clone()).collect();
        b.build()
    }

    /// Shifts every joint of every person by the D-vector `v`.
    pub fn translated(&self, v: &[T]) -> Result<Self> {
        if v.len() != self.dims {
            return Err(Error::Shape {
                op: "translate",
                left: vec![self.dims],
                right: vec![v.len()],
            });
        }
        let mut b = self.to_builder();
        for (_, frames) in &mut b.persons {
            for f in frames.iter_mut() {
                *f = f.translated(v);
            }
        }
        b.build()
    }

    pub fn with_id(&self, id: impl Into<String>) -> Result<Self> {
        let mut b = self.to_builder();
        b.scene_id = id.into();
        b.build()
    }

    pub fn cast<U: Scalar>(&self) -> Scene<U> {
        Scene {
            scene_id: self.scene_id.clone(),
            frame_rate: self.frame_rate,
            dims: self.dims,
            joint_names: self.joint_names.clone(),
            root_joint: self.root_joint,
            persons: self
                .persons
                .iter()
                .map(|p| Person {
                    id: p.id.clone(),
                    track: PoseSequence::new(
                        p.track.frames().iter().map(Pose::cast).collect(),
                        self.frame_rate,
                    )
                    .expect("layout preserved by cast"),
                })
                .collect(),
            context_raw: self
                .context_raw
                .as_ref()
                .map(|c| c.iter().map(|v| v.iter().map(|x| U::lit(x.as_f64())).collect()).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: [f64; 4]) -> Pose<f64> {
        Pose::new(2, c.to_vec()).unwrap()
    }

    fn builder() -> SceneBuilder<f64> {
        SceneBuilder {
            scene_id: "s_1".into(),
            frame_rate: 25.0,
            dims: 2,
            joint_names: vec!["neck".into(), "head".into()],
            root_joint: 0,
            persons: vec![
                ("a".into(), vec![p([0., 0., 0., 1.]), p([1., 0., 1., 1.])]),
                ("b".into(), vec![p([5., 0., 5., 1.]), p([4., 0., 4., 1.])]),
            ],
            context_raw: None,
        }
    }

    #[test]
    fn valid_scene_builds() {
        let s = builder().build().unwrap();
        assert_eq!(s.num_persons(), 2);
        assert_eq!(s.num_frames(), 2);
        assert_eq!(s.group(), "s");
    }

    #[test]
    fn ragged_person_named_in_error() {
        let mut b = builder();
        b.persons[1].1.pop();
        let msg = b.build().unwrap_err().to_string();
        assert!(msg.contains("\"b\""), "{msg}");
    }

    #[test]
    fn context_length_checked() {
        let mut b = builder();
        b.context_raw = Some(vec![vec![1.0, 2.0]]);
        assert!(b.build().is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut b = builder();
        b.persons[1].0 = "a".into();
        assert!(b.build().is_err());
    }

    #[test]
    fn permutation_and_window() {
        let s = builder().build().unwrap();
        let q = s.permuted(&[1, 0]).unwrap();
        assert_eq!(q.persons()[0].id(), "b");
        assert!(s.permuted(&[0, 0]).is_err());
        let w = s.window(1, 1).unwrap();
        assert_eq!(w.persons()[0].track().frames()[0], p([1., 0., 1., 1.]));
    }
}
