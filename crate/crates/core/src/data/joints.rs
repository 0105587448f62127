//! Canonical joint sets and rest-pose templates.
//!
//! `PoseTrack14` is the 14-joint 2D image-space skeleton (pixels, y down).
//! `Ntu13` is a 13-joint 3D subset of the 25-joint Kinect skeleton
//! (centimeters, y up); which 13 joints to keep is a choice made here:
//! head, neck, spine-mid, shoulders, elbows, wrists, hips, knees.
//! `Minimal3` is a 3-joint 2D stick figure for tiny test configurations.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Center,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limb {
    Core,
    /// `distal` marks the wrist (true) versus the elbow.
    Arm { side: Side, distal: bool },
    Leg { side: Side, distal: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointSet {
    PoseTrack14,
    Ntu13,
    Minimal3,
}

struct JointDef {
    name: &'static str,
    rest: [f64; 3],
    limb: Limb,
}

const fn core(name: &'static str, x: f64, y: f64, z: f64) -> JointDef {
    JointDef {
        name,
        rest: [x, y, z],
        limb: Limb::Core,
    }
}

const fn arm(name: &'static str, side: Side, distal: bool, x: f64, y: f64, z: f64) -> JointDef {
    JointDef {
        name,
        rest: [x, y, z],
        limb: Limb::Arm { side, distal },
    }
}

const fn leg(name: &'static str, side: Side, distal: bool, x: f64, y: f64, z: f64) -> JointDef {
    JointDef {
        name,
        rest: [x, y, z],
        limb: Limb::Leg { side, distal },
    }
}

use Side::{Center, Left, Right};

const POSETRACK14: [JointDef; 14] = [
    core("head", 0.0, -20.0, 0.0),
    core("neck", 0.0, 0.0, 0.0),
    core("right_shoulder", -12.0, 2.0, 0.0),
    arm("right_elbow", Right, false, -16.0, 20.0, 0.0),
    arm("right_wrist", Right, true, -18.0, 38.0, 0.0),
    core("left_shoulder", 12.0, 2.0, 0.0),
    arm("left_elbow", Left, false, 16.0, 20.0, 0.0),
    arm("left_wrist", Left, true, 18.0, 38.0, 0.0),
    core("right_hip", -8.0, 45.0, 0.0),
    leg("right_knee", Right, false, -9.0, 70.0, 0.0),
    leg("right_ankle", Right, true, -10.0, 95.0, 0.0),
    core("left_hip", 8.0, 45.0, 0.0),
    leg("left_knee", Left, false, 9.0, 70.0, 0.0),
    leg("left_ankle", Left, true, 10.0, 95.0, 0.0),
];

const NTU13: [JointDef; 13] = [
    core("head", 0.0, 25.0, 0.0),
    core("neck", 0.0, 0.0, 0.0),
    core("spine_mid", 0.0, -25.0, 0.0),
    core("right_shoulder", -18.0, -3.0, 0.0),
    arm("right_elbow", Right, false, -22.0, -30.0, 0.0),
    arm("right_wrist", Right, true, -24.0, -55.0, 0.0),
    core("left_shoulder", 18.0, -3.0, 0.0),
    arm("left_elbow", Left, false, 22.0, -30.0, 0.0),
    arm("left_wrist", Left, true, 24.0, -55.0, 0.0),
    core("right_hip", -10.0, -50.0, 0.0),
    leg("right_knee", Right, false, -11.0, -95.0, 0.0),
    core("left_hip", 10.0, -50.0, 0.0),
    leg("left_knee", Left, false, 11.0, -95.0, 0.0),
];

const MINIMAL3: [JointDef; 3] = [
    core("neck", 0.0, 0.0, 0.0),
    core("head", 0.0, -10.0, 0.0),
    arm("hand", Center, true, 8.0, 15.0, 0.0),
];

impl JointSet {
    fn defs(self) -> &'static [JointDef] {
        match self {
            JointSet::PoseTrack14 => &POSETRACK14,
            JointSet::Ntu13 => &NTU13,
            JointSet::Minimal3 => &MINIMAL3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JointSet::PoseTrack14 => "posetrack14",
            JointSet::Ntu13 => "ntu13",
            JointSet::Minimal3 => "minimal3",
        }
    }

    pub fn len(self) -> usize {
        self.defs().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn dims(self) -> usize {
        match self {
            JointSet::Ntu13 => 3,
            JointSet::PoseTrack14 | JointSet::Minimal3 => 2,
        }
    }

    pub fn joint_names(self) -> Vec<String> {
        self.defs().iter().map(|d| d.name.to_string()).collect()
    }

    /// Index of the neck, the centering joint.
    pub fn root(self) -> usize {
        self.defs().iter().position(|d| d.name == "neck").expect("every set has a neck")
    }

    pub fn limb(self, joint: usize) -> Limb {
        self.defs()[joint].limb
    }

    /// Rest pose relative to the neck, `dims()` coordinates per joint.
    pub fn rest_pose(self) -> Vec<Vec<f64>> {
        let d = self.dims();
        self.defs().iter().map(|j| j.rest[..d].to_vec()).collect()
    }

    /// Unit "up" direction in this set's coordinate convention.
    pub fn up(self) -> Vec<f64> {
        match self {
            JointSet::Ntu13 => vec![0.0, 1.0, 0.0],
            JointSet::PoseTrack14 | JointSet::Minimal3 => vec![0.0, -1.0],
        }
    }
}

impl fmt::Display for JointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "posetrack14" => Ok(JointSet::PoseTrack14),
            "ntu13" => Ok(JointSet::Ntu13),
            "minimal3" => Ok(JointSet::Minimal3),
            other => Err(Error::InvalidArgument(format!(
                "unknown joint set {other:?} (expected posetrack14, ntu13 or minimal3)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_roots() {
        assert_eq!(JointSet::PoseTrack14.len(), 14);
        assert_eq!(JointSet::PoseTrack14.dims(), 2);
        assert_eq!(JointSet::Ntu13.len(), 13);
        assert_eq!(JointSet::Ntu13.dims(), 3);
        for set in [JointSet::PoseTrack14, JointSet::Ntu13, JointSet::Minimal3] {
            let rest = set.rest_pose();
            assert!(rest[set.root()].iter().all(|&v| v == 0.0));
            assert_eq!(set.name().parse::<JointSet>().unwrap(), set);
        }
    }

    #[test]
    fn posetrack_names_cover_the_limbs() {
        let names = JointSet::PoseTrack14.joint_names();
        for n in ["head", "neck", "left_wrist", "right_ankle", "left_hip"] {
            assert!(names.iter().any(|x| x == n), "{n}");
        }
    }
}
