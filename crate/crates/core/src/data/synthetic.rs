//! Deterministic synthetic multi-person scenes.
//!
//! Scenarios:
//! - `approach`: two persons walk toward each other at constant speeds while their limbs swing.
//! - `react`: like `approach`, but once the root distance drops below a threshold the second
//!   person raises both arms over a short ramp. When the reaction starts depends on both
//!   walking speeds, so the second person's future is only predictable from the first
//!   person's observed motion.
//! - `mirror`: the second person's local pose mirrors the first person's with a fixed lag.
//! - `independent`: uncoupled persons with random-walk velocities and periodic limb motion.

use std::fmt;
use std::str::FromStr;

use crate::data::joints::{JointSet, Limb, Side};
use crate::data::pose::Pose;
use crate::data::scene::{Scene, SceneBuilder};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Approach,
    React,
    Mirror,
    Independent,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Approach => "approach",
            Scenario::React => "react",
            Scenario::Mirror => "mirror",
            Scenario::Independent => "independent",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approach" => Ok(Scenario::Approach),
            "react" => Ok(Scenario::React),
            "mirror" => Ok(Scenario::Mirror),
            "independent" => Ok(Scenario::Independent),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario {other:?} (expected approach, react, mirror or independent)"
            ))),
        }
    }
}

/// Scenario parameters. Distances are in the joint set's units, speeds per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub scenario: Scenario,
    pub joint_set: JointSet,
    pub frames: usize,
    pub frame_rate: f64,
    /// Person count for `independent`; the other scenarios always have two.
    pub persons: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Initial root distance along the walking axis for `approach` and `react`.
    pub separation: f64,
    pub react_threshold: f64,
    pub react_amplitude: f64,
    pub react_ramp: usize,
    pub limb_amplitude: f64,
    pub limb_period: f64,
    pub mirror_lag: usize,
    pub walk_noise: f64,
    /// When set, scenes carry a per-frame raw context sequence of this dimension.
    pub context_dim: Option<usize>,
}

impl SyntheticConfig {
    /// Defaults sized for 20-frame clips: with speeds in [1.5, 3] the `react` trigger lands
    /// between frames 10 and 20.
    pub fn new(scenario: Scenario) -> Self {
        SyntheticConfig {
            scenario,
            joint_set: JointSet::PoseTrack14,
            frames: 20,
            frame_rate: 25.0,
            persons: 2,
            speed_min: 1.5,
            speed_max: 3.0,
            separation: 100.0,
            react_threshold: 40.0,
            react_amplitude: 15.0,
            react_ramp: 3,
            limb_amplitude: 3.0,
            limb_period: 12.0,
            mirror_lag: 3,
            walk_noise: 0.3,
            context_dim: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 frames, got {}", self.frames)));
        }
        if !(self.speed_min >= 0.0 && self.speed_max >= self.speed_min) {
            return Err(Error::InvalidArgument("speed range must satisfy 0 <= min <= max".into()));
        }
        if self.scenario == Scenario::Independent && self.persons == 0 {
            return Err(Error::InvalidArgument("independent scenario needs at least one person".into()));
        }
        if self.limb_period <= 0.0 || self.react_ramp == 0 {
            return Err(Error::InvalidArgument("limb period and react ramp must be positive".into()));
        }
        Ok(())
    }
}

/// Per-person motion state shared by the scenario builders.
struct Walker {
    start: Vec<f64>,
    velocity: Vec<f64>,
    phase: f64,
}

fn limb_swing(limb: Limb, amplitude: f64, angle: f64) -> f64 {
    let (side, distal, arm) = match limb {
        Limb::Core => return 0.0,
        Limb::Arm { side, distal } => (side, distal, true),
        Limb::Leg { side, distal } => (side, distal, false),
    };
    let sign = match side {
        Side::Left => -1.0,
        Side::Right | Side::Center => 1.0,
    };
    // Arms swing against the legs on the same side.
    let opposition = if arm { -1.0 } else { 1.0 };
    let reach = if distal { 1.0 } else { 0.5 };
    amplitude * reach * sign * opposition * angle.sin()
}

/// Neck-relative pose for one frame: rest pose plus limb swing along the walking axis.
fn local_pose(cfg: &SyntheticConfig, phase: f64, t: f64) -> Vec<Vec<f64>> {
    let set = cfg.joint_set;
    let angle = std::f64::consts::TAU * t / cfg.limb_period + phase;
    let mut rest = set.rest_pose();
    for (j, joint) in rest.iter_mut().enumerate() {
        joint[0] += limb_swing(set.limb(j), cfg.limb_amplitude, angle);
    }
    rest
}

fn root_at(w: &Walker, t: usize) -> Vec<f64> {
    w.start
        .iter()
        .zip(&w.velocity)
        .map(|(&s, &v)| s + t as f64 * v)
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn assemble<T: Scalar>(root: &[f64], local: &[Vec<f64>]) -> Result<Pose<T>> {
    let coords: Vec<T> = local
        .iter()
        .flat_map(|j| j.iter().zip(root).map(|(&l, &r)| T::lit(r + l)))
        .collect();
    Pose::new(root.len(), coords)
}

fn scene_origin(set: JointSet, rng: &mut SeededRng) -> Vec<f64> {
    match set.dims() {
        3 => vec![rng.uniform_range(-100.0, 100.0), 0.0, rng.uniform_range(250.0, 350.0)],
        _ => vec![rng.uniform_range(50.0, 250.0), rng.uniform_range(150.0, 250.0)],
    }
}

/// Two walkers facing each other along the first axis, `separation` apart.
fn facing_pair(cfg: &SyntheticConfig, rng: &mut SeededRng) -> [Walker; 2] {
    let origin = scene_origin(cfg.joint_set, rng);
    let d = origin.len();
    let lateral = |rng: &mut SeededRng| {
        let mut v = vec![0.0; d];
        // image-space vertical jitter (2D) or depth jitter (3D)
        v[d - 1] = rng.uniform_range(-5.0, 5.0);
        v
    };
    let s1 = rng.uniform_range(cfg.speed_min, cfg.speed_max);
    let s2 = rng.uniform_range(cfg.speed_min, cfg.speed_max);
    let j1 = lateral(rng);
    let j2 = lateral(rng);
    let phase1 = rng.uniform_range(0.0, std::f64::consts::TAU);
    let phase2 = rng.uniform_range(0.0, std::f64::consts::TAU);
    let mut start1: Vec<f64> = origin.iter().zip(&j1).map(|(o, j)| o + j).collect();
    let mut start2: Vec<f64> = origin.iter().zip(&j2).map(|(o, j)| o + j).collect();
    start1[0] = origin[0];
    start2[0] = origin[0] + cfg.separation;
    let mut v1 = vec![0.0; d];
    let mut v2 = vec![0.0; d];
    v1[0] = s1;
    v2[0] = -s2;
    [
        Walker {
            start: start1,
            velocity: v1,
            phase: phase1,
        },
        Walker {
            start: start2,
            velocity: v2,
            phase: phase2,
        },
    ]
}

/// First frame at which the two walkers' roots are closer than the threshold.
pub fn react_trigger_frame(roots_a: &[Vec<f64>], roots_b: &[Vec<f64>], threshold: f64) -> Option<usize> {
    roots_a
        .iter()
        .zip(roots_b)
        .position(|(a, b)| distance(a, b) < threshold)
}

fn context_sequence<T: Scalar>(dim: usize, frames: usize, rng: &mut SeededRng) -> Vec<Vec<T>> {
    let base: Vec<f64> = (0..dim).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    (0..frames)
        .map(|t| {
            base.iter()
                .enumerate()
                .map(|(k, b)| T::lit(b + 0.1 * (0.3 * t as f64 + k as f64).sin()))
                .collect()
        })
        .collect()
}

/// Generates one scene. The same config and seed always produce the same scene.
pub fn generate_synthetic<T: Scalar>(cfg: &SyntheticConfig, seed: u64) -> Result<Scene<T>> {
    cfg.validate()?;
    let mut rng = SeededRng::new(seed);
    let set = cfg.joint_set;
    let frames = cfg.frames;
    let mut persons: Vec<(String, Vec<Pose<T>>)> = Vec::new();

    match cfg.scenario {
        Scenario::Approach | Scenario::React => {
            let walkers = facing_pair(cfg, &mut rng);
            let roots: Vec<Vec<Vec<f64>>> = walkers
                .iter()
                .map(|w| (0..frames).map(|t| root_at(w, t)).collect())
                .collect();
            let trigger = match cfg.scenario {
                Scenario::React => react_trigger_frame(&roots[0], &roots[1], cfg.react_threshold),
                _ => None,
            };
            let up = set.up();
            for (i, w) in walkers.iter().enumerate() {
                let mut track = Vec::with_capacity(frames);
                for (t, root) in roots[i].iter().enumerate() {
                    let mut local = local_pose(cfg, w.phase, t as f64);
                    if let (1, Some(t0)) = (i, trigger) {
                        if t >= t0 {
                            let ramp = ((t - t0 + 1) as f64 / cfg.react_ramp as f64).min(1.0);
                            for (j, joint) in local.iter_mut().enumerate() {
                                let reach = match set.limb(j) {
                                    Limb::Arm { distal: true, .. } => 1.0,
                                    Limb::Arm { distal: false, .. } => 0.5,
                                    _ => 0.0,
                                };
                                for (c, u) in joint.iter_mut().zip(&up) {
                                    *c += cfg.react_amplitude * reach * ramp * u;
                                }
                            }
                        }
                    }
                    track.push(assemble(root, &local)?);
                }
                persons.push((format!("p{i}"), track));
            }
        }
        Scenario::Mirror => {
            let walkers = facing_pair(cfg, &mut rng);
            let lag = cfg.mirror_lag as f64;
            for (i, w) in walkers.iter().enumerate() {
                let mut track = Vec::with_capacity(frames);
                for t in 0..frames {
                    let local = if i == 0 {
                        local_pose(cfg, walkers[0].phase, t as f64)
                    } else {
                        let mut l = local_pose(cfg, walkers[0].phase, t as f64 - lag);
                        for joint in &mut l {
                            joint[0] = -joint[0];
                        }
                        l
                    };
                    track.push(assemble(&root_at(w, t), &local)?);
                }
                persons.push((format!("p{i}"), track));
            }
        }
        Scenario::Independent => {
            let origin = scene_origin(set, &mut rng);
            let d = origin.len();
            // ground-plane axes: x/y in image space, x/z in 3D
            let plane = if d == 3 { [0, 2] } else { [0, 1] };
            for i in 0..cfg.persons {
                let mut pos = origin.clone();
                for &a in &plane {
                    pos[a] += rng.uniform_range(-60.0, 60.0);
                }
                let speed = rng.uniform_range(cfg.speed_min, cfg.speed_max);
                let heading = rng.uniform_range(0.0, std::f64::consts::TAU);
                let mut vel = vec![0.0; d];
                vel[plane[0]] = speed * heading.cos();
                vel[plane[1]] = speed * heading.sin();
                let phase = rng.uniform_range(0.0, std::f64::consts::TAU);
                let mut track = Vec::with_capacity(frames);
                for t in 0..frames {
                    track.push(assemble(&pos, &local_pose(cfg, phase, t as f64))?);
                    for &a in &plane {
                        vel[a] += cfg.walk_noise * rng.normal();
                        pos[a] += vel[a];
                    }
                }
                persons.push((format!("p{i}"), track));
            }
        }
    }

    let context_raw = cfg.context_dim.map(|f| context_sequence(f, frames, &mut rng));
    SceneBuilder {
        scene_id: format!("{}_{seed}", cfg.scenario),
        frame_rate: cfg.frame_rate,
        dims: set.dims(),
        joint_names: set.joint_names(),
        root_joint: set.root(),
        persons,
        context_raw,
    }
    .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::format::{parse_scene, serialize_scene};

    fn roots(scene: &Scene<f64>, person: usize) -> Vec<Vec<f64>> {
        let r = scene.root_joint();
        scene.persons()[person]
            .track()
            .frames()
            .iter()
            .map(|f| f.joint(r).to_vec())
            .collect()
    }

    #[test]
    fn independent_is_deterministic() {
        let cfg = SyntheticConfig::new(Scenario::Independent);
        let a: Scene<f64> = generate_synthetic(&cfg, 17).unwrap();
        let b: Scene<f64> = generate_synthetic(&cfg, 17).unwrap();
        assert_eq!(a, b);
        let c: Scene<f64> = generate_synthetic(&cfg, 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn approach_roots_move_linearly() {
        let cfg = SyntheticConfig::new(Scenario::Approach);
        let s: Scene<f64> = generate_synthetic(&cfg, 4).unwrap();
        for p in 0..2 {
            let r = roots(&s, p);
            let v: Vec<f64> = r[1].iter().zip(&r[0]).map(|(b, a)| b - a).collect();
            for (t, root) in r.iter().enumerate() {
                for k in 0..2 {
                    let expected = r[0][k] + t as f64 * v[k];
                    assert!((root[k] - expected).abs() < 1e-9, "person {p} frame {t}");
                }
            }
            assert_eq!(v[1], 0.0);
        }
        // they walk toward each other
        assert!(roots(&s, 0)[1][0] > roots(&s, 0)[0][0]);
        assert!(roots(&s, 1)[1][0] < roots(&s, 1)[0][0]);
    }

    #[test]
    fn react_deflection_starts_at_first_close_frame() {
        let cfg = SyntheticConfig::new(Scenario::React);
        let calm = SyntheticConfig {
            react_amplitude: 0.0,
            ..cfg.clone()
        };
        let mut triggered = 0;
        for seed in 0..20 {
            let s: Scene<f64> = generate_synthetic(&cfg, seed).unwrap();
            let base: Scene<f64> = generate_synthetic(&calm, seed).unwrap();
            // independent scan of the generated roots
            let (ra, rb) = (roots(&s, 0), roots(&s, 1));
            let scan = (0..s.num_frames()).find(|&t| {
                let d: f64 = ra[t].iter().zip(&rb[t]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                d < cfg.react_threshold
            });
            let first_diff = (0..s.num_frames()).find(|&t| {
                s.persons()[1].track().frames()[t] != base.persons()[1].track().frames()[t]
            });
            assert_eq!(first_diff, scan, "seed {seed}");
            assert_eq!(s.persons()[0], base.persons()[0]);
            if scan.is_some() {
                triggered += 1;
                // initially beyond threshold
                assert!(scan.unwrap() > 0);
            }
        }
        assert!(triggered > 10);
    }

    #[test]
    fn mirror_copies_lagged_local_pose() {
        let cfg = SyntheticConfig::new(Scenario::Mirror);
        let s: Scene<f64> = generate_synthetic(&cfg, 2).unwrap();
        let root = s.root_joint();
        let lag = cfg.mirror_lag;
        for t in lag..s.num_frames() {
            let a = &s.persons()[0].track().frames()[t - lag];
            let b = &s.persons()[1].track().frames()[t];
            for j in 0..s.num_joints() {
                let la = a.joint(j)[0] - a.joint(root)[0];
                let lb = b.joint(j)[0] - b.joint(root)[0];
                assert!((la + lb).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unknown_scenario_rejected() {
        assert!("dance".parse::<Scenario>().is_err());
    }

    #[test]
    fn generated_scenes_survive_the_file_format() {
        for sc in [Scenario::Approach, Scenario::React, Scenario::Mirror, Scenario::Independent] {
            for set in [JointSet::PoseTrack14, JointSet::Ntu13, JointSet::Minimal3] {
                let cfg = SyntheticConfig {
                    joint_set: set,
                    context_dim: Some(4),
                    ..SyntheticConfig::new(sc)
                };
                let s: Scene<f64> = generate_synthetic(&cfg, 9).unwrap();
                let back: Scene<f64> = parse_scene(&serialize_scene(&s)).unwrap();
                assert_eq!(back, s);
            }
        }
    }
}
