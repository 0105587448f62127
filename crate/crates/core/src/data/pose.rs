use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One skeleton: `L` joints of `D` coordinates, stored joint-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose<T> {
    dims: usize,
    coords: Vec<T>,
}

impl<T: Scalar> Pose<T> {
    /// Flat constructor; `coords.len()` must be a multiple of `dims` with at least two joints.
    pub fn new(dims: usize, coords: Vec<T>) -> Result<Self> {
        if !(2..=3).contains(&dims) {
            return Err(Error::InvalidArgument(format!("pose dims must be 2 or 3, got {dims}")));
        }
        if coords.len() % dims != 0 || coords.len() / dims < 2 {
            return Err(Error::InvalidArgument(format!(
                "pose needs at least 2 joints of {dims} coordinates, got {} values",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("pose coordinate {i}")));
        }
        Ok(Pose { dims, coords })
    }

    pub fn from_joints(joints: &[Vec<T>]) -> Result<Self> {
        let dims = joints.first().map_or(0, Vec::len);
        if let Some(j) = joints.iter().position(|c| c.len() != dims) {
            return Err(Error::InvalidArgument(format!(
                "joint {j} has {} coordinates, expected {dims}",
                joints[j].len()
            )));
        }
        Self::new(dims, joints.concat())
    }

    pub(crate) fn from_parts_unchecked(dims: usize, coords: Vec<T>) -> Self {
        Pose { dims, coords }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_joints(&self) -> usize {
        self.coords.len() / self.dims
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn joint(&self, j: usize) -> &[T] {
        &self.coords[j * self.dims..(j + 1) * self.dims]
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.dims == other.dims && self.coords.len() == other.coords.len()
    }

    /// Adds `v` (a D-vector) to every joint.
    pub fn translated(&self, v: &[T]) -> Self {
        let coords = self
            .coords
            .chunks_exact(self.dims)
            .flat_map(|j| j.iter().zip(v).map(|(&a, &b)| a + b))
            .collect();
        Pose::from_parts_unchecked(self.dims, coords)
    }

    pub fn cast<U: Scalar>(&self) -> Pose<U> {
        Pose {
            dims: self.dims,
            coords: self.coords.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Subtracts the root joint from every joint. Returns the centered pose and the root position.
pub fn center_pose<T: Scalar>(p: &Pose<T>, root: usize) -> Result<(Pose<T>, Vec<T>)> {
    if root >= p.num_joints() {
        return Err(Error::Index {
            what: "pose joints",
            index: root,
            len: p.num_joints(),
        });
    }
    let origin = p.joint(root).to_vec();
    let coords = p
        .coords
        .chunks_exact(p.dims)
        .flat_map(|j| j.iter().zip(&origin).map(|(&a, &o)| a - o))
        .collect();
    Ok((Pose::from_parts_unchecked(p.dims, coords), origin))
}

/// Inverse of [`center_pose`].
pub fn uncenter_pose<T: Scalar>(local: &Pose<T>, root_position: &[T]) -> Pose<T> {
    local.translated(root_position)
}

/// Absolute poses over time at a fixed frame rate.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence<T> {
    frames: Vec<Pose<T>>,
    frame_rate: f64,
}

impl<T: Scalar> PoseSequence<T> {
    pub fn new(frames: Vec<Pose<T>>, frame_rate: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidArgument("pose sequence has no frames".into()));
        }
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::InvalidArgument(format!("frame rate {frame_rate} must be positive")));
        }
        if let Some(i) = frames.iter().position(|f| !f.same_layout(&frames[0])) {
            return Err(Error::InvalidArgument(format!(
                "frame {i} joint layout differs from frame 0"
            )));
        }
        Ok(PoseSequence { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Pose<T>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn last(&self) -> &Pose<T> {
        self.frames.last().expect("non-empty by construction")
    }

    pub fn num_joints(&self) -> usize {
        self.frames[0].num_joints()
    }

    pub fn dims(&self) -> usize {
        self.frames[0].dims()
    }

    /// Frames `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.frames.len() {
            return Err(Error::InvalidArgument(format!(
                "window {start}..{} outside sequence of {} frames",
                start + len,
                self.frames.len()
            )));
        }
        Ok(PoseSequence {
            frames: self.frames[start..start + len].to_vec(),
            frame_rate: self.frame_rate,
        })
    }

    pub fn centered(&self, root: usize) -> Result<(Self, Vec<Vec<T>>)> {
        let mut frames = Vec::with_capacity(self.frames.len());
        let mut roots = Vec::with_capacity(self.frames.len());
        for f in &self.frames {
            let (local, r) = center_pose(f, root)?;
            frames.push(local);
            roots.push(r);
        }
        Ok((
            PoseSequence {
                frames,
                frame_rate: self.frame_rate,
            },
            roots,
        ))
    }

    pub fn translated(&self, v: &[T]) -> Self {
        PoseSequence {
            frames: self.frames.iter().map(|f| f.translated(v)).collect(),
            frame_rate: self.frame_rate,
        }
    }
}

/// First differences of a pose sequence, one flat `L·D` vector per step.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetSequence<T> {
    dims: usize,
    joints: usize,
    deltas: Vec<Vec<T>>,
}

impl<T: Scalar> OffsetSequence<T> {
    pub fn new(joints: usize, dims: usize, deltas: Vec<Vec<T>>) -> Result<Self> {
        if let Some(i) = deltas.iter().position(|d| d.len() != joints * dims) {
            return Err(Error::Shape {
                op: "offsets",
                left: vec![joints * dims],
                right: vec![i, deltas[i].len()],
            });
        }
        Ok(OffsetSequence { dims, joints, deltas })
    }

    pub fn deltas(&self) -> &[Vec<T>] {
        &self.deltas
    }

    pub fn into_deltas(self) -> Vec<Vec<T>> {
        self.deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_joints(&self) -> usize {
        self.joints
    }

    /// Flattened width `L·D` of each delta.
    pub fn width(&self) -> usize {
        self.joints * self.dims
    }
}

/// `deltas[i] = frames[i+1] − frames[i]`.
pub fn to_offsets<T: Scalar>(s: &PoseSequence<T>) -> Result<OffsetSequence<T>> {
    if s.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "offsets need at least 2 frames, got {}",
            s.len()
        )));
    }
    let deltas = s
        .frames
        .windows(2)
        .map(|w| w[1].coords.iter().zip(&w[0].coords).map(|(&b, &a)| b - a).collect())
        .collect();
    Ok(OffsetSequence {
        dims: s.dims(),
        joints: s.num_joints(),
        deltas,
    })
}

/// Poses reached by cumulatively adding `deltas` to `start`, excluding `start` itself.
pub fn accumulate_offsets<T: Scalar>(start: &Pose<T>, deltas: &[Vec<T>]) -> Result<Vec<Pose<T>>> {
    let mut cur = start.coords.clone();
    let mut out = Vec::with_capacity(deltas.len());
    for (i, d) in deltas.iter().enumerate() {
        if d.len() != cur.len() {
            return Err(Error::Shape {
                op: "accumulate_offsets",
                left: vec![cur.len()],
                right: vec![i, d.len()],
            });
        }
        for (c, &dv) in cur.iter_mut().zip(d) {
            *c += dv;
        }
        out.push(Pose::from_parts_unchecked(start.dims, cur.clone()));
    }
    Ok(out)
}

/// Rebuilds a sequence from its first pose and offsets; `start` is frame 0 of the result.
pub fn from_offsets<T: Scalar>(start: &Pose<T>, o: &OffsetSequence<T>, frame_rate: f64) -> Result<PoseSequence<T>> {
    if o.dims != start.dims || o.joints != start.num_joints() {
        return Err(Error::Shape {
            op: "from_offsets",
            left: vec![start.num_joints(), start.dims],
            right: vec![o.joints, o.dims],
        });
    }
    let mut frames = vec![start.clone()];
    frames.extend(accumulate_offsets(start, &o.deltas)?);
    PoseSequence::new(frames, frame_rate)
}
