//! Parameter-free forecasters and the rule that turns a local (root-centered) pose
//! forecast back into global coordinates.
//!
//! Velocities come from the last `window` observed frames: `(x[T−1] − x[T−1−window]) / window`.
//! The default window of 1 uses the last two frames only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Pose, PoseSequence};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_VELOCITY_WINDOW: usize = 1;

/// Tolerance on the root coordinate of a "centered" pose.
pub const CENTERED_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionRule {
    /// Root stays at its last observed position.
    #[default]
    Zero,
    /// Root keeps moving with its last observed velocity.
    Constant,
}

impl MotionRule {
    pub fn name(self) -> &'static str {
        match self {
            MotionRule::Zero => "zero",
            MotionRule::Constant => "constant",
        }
    }

    /// Root positions for future frames `1..=steps`.
    pub fn root_trajectory<T: Scalar>(
        self,
        obs: &PoseSequence<T>,
        root: usize,
        steps: usize,
        window: usize,
    ) -> Result<Vec<Vec<T>>> {
        let last = obs.last().joint(checked_root(obs, root)?).to_vec();
        let velocity = match self {
            MotionRule::Zero => vec![T::zero(); last.len()],
            MotionRule::Constant => joint_velocity(obs, root, window)?,
        };
        Ok((1..=steps)
            .map(|k| {
                let k = T::from_usize_exact(k);
                last.iter().zip(&velocity).map(|(&r, &v)| r + k * v).collect()
            })
            .collect())
    }
}

impl fmt::Display for MotionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(MotionRule::Zero),
            "constant" => Ok(MotionRule::Constant),
            other => Err(Error::InvalidArgument(format!(
                "unknown motion rule {other:?} (expected zero or constant)"
            ))),
        }
    }
}

fn checked_root<T: Scalar>(obs: &PoseSequence<T>, root: usize) -> Result<usize> {
    if root >= obs.num_joints() {
        return Err(Error::Index {
            what: "root joint",
            index: root,
            len: obs.num_joints(),
        });
    }
    Ok(root)
}

fn check_window<T: Scalar>(obs: &PoseSequence<T>, window: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::InvalidArgument("velocity window must be at least 1".into()));
    }
    if obs.len() < window + 1 {
        return Err(Error::InvalidArgument(format!(
            "constant-velocity estimate over {window} step(s) needs at least {} observed frames, got {}",
            window + 1,
            obs.len()
        )));
    }
    Ok(())
}

/// Velocity of joint `j` over the last `window` observed steps.
pub fn joint_velocity<T: Scalar>(obs: &PoseSequence<T>, j: usize, window: usize) -> Result<Vec<T>> {
    check_window(obs, window)?;
    checked_root(obs, j)?;
    let frames = obs.frames();
    let last = frames[frames.len() - 1].joint(j);
    let first = frames[frames.len() - 1 - window].joint(j);
    let w = T::from_usize_exact(window);
    Ok(last.iter().zip(first).map(|(&b, &a)| (b - a) / w).collect())
}

fn check_steps(t_pred: usize) -> Result<()> {
    if t_pred == 0 {
        return Err(Error::InvalidArgument("prediction length must be at least 1".into()));
    }
    Ok(())
}

/// Repeats the last observed pose at its last location.
pub fn zero_pose_zero_motion<T: Scalar>(obs: &PoseSequence<T>, t_pred: usize) -> Result<PoseSequence<T>> {
    check_steps(t_pred)?;
    PoseSequence::new(vec![obs.last().clone(); t_pred], obs.frame_rate())
}

/// Translates the last pose rigidly by the root velocity each step.
pub fn zero_pose_constant_motion<T: Scalar>(obs: &PoseSequence<T>, t_pred: usize, root: usize) -> Result<PoseSequence<T>> {
    zero_pose_constant_motion_window(obs, t_pred, root, DEFAULT_VELOCITY_WINDOW)
}

pub fn zero_pose_constant_motion_window<T: Scalar>(
    obs: &PoseSequence<T>,
    t_pred: usize,
    root: usize,
    window: usize,
) -> Result<PoseSequence<T>> {
    check_steps(t_pred)?;
    let v = joint_velocity(obs, root, window)?;
    let last = obs.last();
    let frames = (1..=t_pred)
        .map(|k| {
            let k = T::from_usize_exact(k);
            let shift: Vec<T> = v.iter().map(|&c| k * c).collect();
            last.translated(&shift)
        })
        .collect();
    PoseSequence::new(frames, obs.frame_rate())
}

/// Root moves with constant velocity and each joint's root-relative position is
/// extrapolated with its own last local velocity.
pub fn constant_pose_constant_motion<T: Scalar>(obs: &PoseSequence<T>, t_pred: usize, root: usize) -> Result<PoseSequence<T>> {
    constant_pose_constant_motion_window(obs, t_pred, root, DEFAULT_VELOCITY_WINDOW)
}

pub fn constant_pose_constant_motion_window<T: Scalar>(
    obs: &PoseSequence<T>,
    t_pred: usize,
    root: usize,
    window: usize,
) -> Result<PoseSequence<T>> {
    check_steps(t_pred)?;
    check_window(obs, window)?;
    let (local, _) = obs.centered(checked_root(obs, root)?)?;
    let frames = local.frames();
    let last = &frames[frames.len() - 1];
    let first = &frames[frames.len() - 1 - window];
    let w = T::from_usize_exact(window);
    let local_v: Vec<T> = last.coords().iter().zip(first.coords()).map(|(&b, &a)| (b - a) / w).collect();
    let local_pred = (1..=t_pred)
        .map(|k| {
            let k = T::from_usize_exact(k);
            let coords = last.coords().iter().zip(&local_v).map(|(&c, &v)| c + k * v).collect();
            Pose::new(obs.dims(), coords)
        })
        .collect::<Result<Vec<_>>>()?;
    let roots = MotionRule::Constant.root_trajectory(obs, root, t_pred, window)?;
    place_on_roots(&local_pred, &roots, obs.frame_rate())
}

/// The last observed root-centered pose, frozen, carried along `rule`'s root trajectory.
pub fn local_pose_frozen<T: Scalar>(
    obs: &PoseSequence<T>,
    t_pred: usize,
    root: usize,
    rule: MotionRule,
    window: usize,
) -> Result<PoseSequence<T>> {
    check_steps(t_pred)?;
    let (local, _) = obs.centered(checked_root(obs, root)?)?;
    let frozen = PoseSequence::new(vec![local.last().clone(); t_pred], obs.frame_rate())?;
    compose_local_pose_window(&frozen, obs, root, rule, window)
}

fn place_on_roots<T: Scalar>(local: &[Pose<T>], roots: &[Vec<T>], frame_rate: f64) -> Result<PoseSequence<T>> {
    PoseSequence::new(
        local.iter().zip(roots).map(|(p, r)| p.translated(r)).collect(),
        frame_rate,
    )
}

/// Adds a root trajectory to a local pose forecast. Every frame of `local_pred` must
/// have its root joint at the origin (within [`CENTERED_TOLERANCE`]).
pub fn compose_local_pose<T: Scalar>(
    local_pred: &PoseSequence<T>,
    obs: &PoseSequence<T>,
    root: usize,
    rule: MotionRule,
) -> Result<PoseSequence<T>> {
    compose_local_pose_window(local_pred, obs, root, rule, DEFAULT_VELOCITY_WINDOW)
}

pub fn compose_local_pose_window<T: Scalar>(
    local_pred: &PoseSequence<T>,
    obs: &PoseSequence<T>,
    root: usize,
    rule: MotionRule,
    window: usize,
) -> Result<PoseSequence<T>> {
    checked_root(obs, root)?;
    if !local_pred.last().same_layout(obs.last()) {
        return Err(Error::Shape {
            op: "compose_local_pose",
            left: vec![obs.num_joints(), obs.dims()],
            right: vec![local_pred.num_joints(), local_pred.dims()],
        });
    }
    let tol = T::lit(CENTERED_TOLERANCE);
    for (i, f) in local_pred.frames().iter().enumerate() {
        if f.joint(root).iter().any(|c| c.abs() > tol) {
            return Err(Error::InvalidArgument(format!(
                "local pose frame {i} is not root-centered (root at {:?})",
                f.joint(root)
            )));
        }
    }
    let roots = rule.root_trajectory(obs, root, local_pred.len(), window)?;
    place_on_roots(local_pred.frames(), &roots, obs.frame_rate())
}

/// Adds explicit per-frame root positions to centered poses.
pub fn compose_with_roots<T: Scalar>(local: &PoseSequence<T>, roots: &[Vec<T>]) -> Result<PoseSequence<T>> {
    if roots.len() != local.len() {
        return Err(Error::Shape {
            op: "compose_with_roots",
            left: vec![local.len()],
            right: vec![roots.len()],
        });
    }
    place_on_roots(local.frames(), roots, local.frame_rate())
}

/// The three closed-form baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Baseline {
    ZeroPoseZeroMotion,
    ZeroPoseConstantMotion,
    ConstantPoseConstantMotion,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [
        Baseline::ZeroPoseZeroMotion,
        Baseline::ZeroPoseConstantMotion,
        Baseline::ConstantPoseConstantMotion,
    ];

    /// Short identifier used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            Baseline::ZeroPoseZeroMotion => "zpzm",
            Baseline::ZeroPoseConstantMotion => "zpcm",
            Baseline::ConstantPoseConstantMotion => "cpcm",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Baseline::ZeroPoseZeroMotion => "ZeroPose-ZeroMotion",
            Baseline::ZeroPoseConstantMotion => "ZeroPose-ConstantMotion",
            Baseline::ConstantPoseConstantMotion => "ConstantPose-ConstantMotion",
        }
    }

    pub fn predict<T: Scalar>(self, obs: &PoseSequence<T>, t_pred: usize, root: usize, window: usize) -> Result<PoseSequence<T>> {
        match self {
            Baseline::ZeroPoseZeroMotion => zero_pose_zero_motion(obs, t_pred),
            Baseline::ZeroPoseConstantMotion => zero_pose_constant_motion_window(obs, t_pred, root, window),
            Baseline::ConstantPoseConstantMotion => constant_pose_constant_motion_window(obs, t_pred, root, window),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s || b.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown baseline {s:?} (expected zpzm, zpcm or cpcm)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(frames: Vec<Vec<Vec<f64>>>) -> PoseSequence<f64> {
        PoseSequence::new(frames.iter().map(|j| Pose::from_joints(j).unwrap()).collect(), 25.0).unwrap()
    }

    // neck at joint 0, a hand at joint 1
    fn walker(t: usize, v: [f64; 2], drift: [f64; 2]) -> PoseSequence<f64> {
        seq((0..t)
            .map(|i| {
                let i = i as f64;
                let neck = vec![10.0 + v[0] * i, 20.0 + v[1] * i];
                let hand = vec![neck[0] + 3.0 + drift[0] * i, neck[1] - 4.0 + drift[1] * i];
                vec![neck, hand]
            })
            .collect())
    }

    #[test]
    fn zpzm_repeats_last_pose() {
        let obs = walker(4, [1.0, 2.0], [0.0, 0.0]);
        let p = zero_pose_zero_motion(&obs, 3).unwrap();
        assert!(p.frames().iter().all(|f| f == obs.last()));
        assert!(zero_pose_zero_motion(&obs, 0).is_err());
    }

    #[test]
    fn zpcm_is_exact_on_rigid_translation() {
        let full = walker(8, [2.0, -1.0], [0.0, 0.0]);
        let obs = full.slice(0, 5).unwrap();
        let p = zero_pose_constant_motion(&obs, 3, 0).unwrap();
        assert_eq!(p.frames(), &full.frames()[5..]);
    }

    #[test]
    fn cpcm_is_exact_on_translation_plus_local_drift() {
        let full = walker(8, [2.0, -1.0], [0.5, 0.25]);
        let obs = full.slice(0, 5).unwrap();
        let p = constant_pose_constant_motion(&obs, 3, 0).unwrap();
        assert_eq!(p.frames(), &full.frames()[5..]);
    }

    #[test]
    fn constant_rules_need_two_frames() {
        let obs = walker(1, [1.0, 1.0], [0.0, 0.0]);
        assert!(zero_pose_constant_motion(&obs, 2, 0).is_err());
        assert!(constant_pose_constant_motion(&obs, 2, 0).is_err());
        assert!(MotionRule::Constant.root_trajectory(&obs, 0, 2, 1).is_err());
        assert!(MotionRule::Zero.root_trajectory(&obs, 0, 2, 1).is_ok());
    }

    #[test]
    fn window_averages_velocity() {
        // root x: 0, 0, 4 → window 1 gives 4, window 2 gives 2
        let obs = seq(vec![
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![vec![4.0, 0.0], vec![5.0, 1.0]],
        ]);
        assert_eq!(joint_velocity(&obs, 0, 1).unwrap(), vec![4.0, 0.0]);
        assert_eq!(joint_velocity(&obs, 0, 2).unwrap(), vec![2.0, 0.0]);
        assert!(joint_velocity(&obs, 0, 3).is_err());
    }

    #[test]
    fn compose_rules() {
        let obs = walker(3, [1.0, 3.0], [0.0, 0.0]);
        let (local, _) = obs.centered(0).unwrap();
        let frozen = PoseSequence::new(vec![local.last().clone(); 2], 25.0).unwrap();
        let z = compose_local_pose(&frozen, &obs, 0, MotionRule::Zero).unwrap();
        assert!(z.frames().iter().all(|f| f.joint(0) == obs.last().joint(0)));
        let c = compose_local_pose(&frozen, &obs, 0, MotionRule::Constant).unwrap();
        assert_eq!(c.frames()[1].joint(0), &[14.0, 32.0]);
    }

    #[test]
    fn compose_round_trips_ground_truth() {
        let gt = walker(6, [1.5, -0.5], [0.25, 0.125]);
        let (local, roots) = gt.centered(0).unwrap();
        assert_eq!(compose_with_roots(&local, &roots).unwrap(), gt);
    }

    #[test]
    fn compose_rejects_uncentered_input() {
        let obs = walker(3, [1.0, 0.0], [0.0, 0.0]);
        assert!(compose_local_pose(&obs, &obs, 0, MotionRule::Zero).is_err());
    }

    #[test]
    fn baseline_names_parse() {
        for b in Baseline::ALL {
            assert_eq!(b.name().parse::<Baseline>().unwrap(), b);
            assert_eq!(b.label().parse::<Baseline>().unwrap(), b);
        }
        assert!("zpxm".parse::<Baseline>().is_err());
    }
}
