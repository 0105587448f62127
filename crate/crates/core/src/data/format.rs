//! Canonical scene files (JSON) and split manifests.
//!
//! A scene file looks like
//!
//! ```text
//! {
//!   "scene_id": "react_0000",
//!   "frame_rate": 25.0,
//!   "dims": 2,
//!   "joint_names": ["head", "neck", ...],
//!   "root_joint": 1,
//!   "persons": [{"person_id": "p0", "frames": [[[x, y], ...], ...]}],
//!   "context_raw": [[f0, f1, ...], ...]
//! }
//! ```
//!
//! `context_raw` is optional. The serializer writes one frame per line so
//! files diff cleanly, and always emits the same bytes for the same scene.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::data::pose::Pose;
use crate::data::scene::{Scene, SceneBuilder};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    scene_id: String,
    frame_rate: f64,
    dims: usize,
    joint_names: Vec<String>,
    root_joint: usize,
    persons: Vec<RawPerson>,
    #[serde(default)]
    context_raw: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerson {
    person_id: String,
    frames: Vec<Vec<Vec<f64>>>,
}

fn to_scalar<T: Scalar>(v: f64, path: impl FnOnce() -> String) -> Result<T> {
    if !v.is_finite() {
        return Err(Error::parse(path(), "non-finite number"));
    }
    let t = T::lit(v);
    if !t.is_finite() {
        return Err(Error::parse(path(), format!("{v} overflows the scalar type")));
    }
    Ok(t)
}

/// Parses and validates a canonical scene document.
pub fn parse_scene<T: Scalar>(bytes: &[u8]) -> Result<Scene<T>> {
    let raw: RawScene =
        serde_json::from_slice(bytes).map_err(|e| Error::parse("$", e.to_string()))?;
    let joints = raw.joint_names.len();
    let expected_frames = raw.persons.first().map_or(0, |p| p.frames.len());
    let mut persons = Vec::with_capacity(raw.persons.len());
    for (pi, person) in raw.persons.into_iter().enumerate() {
        let ppath = format!("$.persons[{pi}] ({:?})", person.person_id);
        if person.frames.len() != expected_frames {
            return Err(Error::parse(
                &ppath,
                format!(
                    "person {:?} has {} frames, expected {expected_frames}; persons must be present in every frame",
                    person.person_id,
                    person.frames.len()
                ),
            ));
        }
        let mut poses = Vec::with_capacity(person.frames.len());
        for (t, frame) in person.frames.into_iter().enumerate() {
            if frame.len() != joints {
                return Err(Error::parse(
                    format!("{ppath}.frames[{t}]"),
                    format!("{} joints, expected {joints}", frame.len()),
                ));
            }
            let mut coords = Vec::with_capacity(joints * raw.dims);
            for (j, joint) in frame.into_iter().enumerate() {
                if joint.len() != raw.dims {
                    return Err(Error::parse(
                        format!("{ppath}.frames[{t}][{j}]"),
                        format!("{} coordinates, expected {}", joint.len(), raw.dims),
                    ));
                }
                for (c, v) in joint.into_iter().enumerate() {
                    coords.push(to_scalar(v, || format!("{ppath}.frames[{t}][{j}][{c}]"))?);
                }
            }
            poses.push(
                Pose::new(raw.dims, coords).map_err(|e| Error::parse(format!("{ppath}.frames[{t}]"), e.to_string()))?,
            );
        }
        persons.push((person.person_id, poses));
    }
    let context_raw = match raw.context_raw {
        None => None,
        Some(rows) => {
            if rows.len() != expected_frames {
                return Err(Error::parse(
                    "$.context_raw",
                    format!("{} entries, expected one per frame ({expected_frames})", rows.len()),
                ));
            }
            let mut out = Vec::with_capacity(rows.len());
            for (t, row) in rows.into_iter().enumerate() {
                let v = row
                    .into_iter()
                    .enumerate()
                    .map(|(k, x)| to_scalar(x, || format!("$.context_raw[{t}][{k}]")))
                    .collect::<Result<Vec<T>>>()?;
                out.push(v);
            }
            Some(out)
        }
    };
    SceneBuilder {
        scene_id: raw.scene_id,
        frame_rate: raw.frame_rate,
        dims: raw.dims,
        joint_names: raw.joint_names,
        root_joint: raw.root_joint,
        persons,
        context_raw,
    }
    .build()
    .map_err(|e| Error::parse("$", e.to_string()))
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_num<T: Scalar>(v: T) -> String {
    serde_json::to_string(&v.as_f64()).expect("finite floats always serialize")
}

fn json_vec<T: Scalar>(v: &[T]) -> String {
    let items: Vec<String> = v.iter().map(|&x| json_num(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Canonical bytes for a scene.
pub fn serialize_scene<T: Scalar>(scene: &Scene<T>) -> Vec<u8> {
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"scene_id\": {},", json_str(scene.id()));
    let _ = writeln!(s, "  \"frame_rate\": {},", json_num(scene.frame_rate()));
    let _ = writeln!(s, "  \"dims\": {},", scene.dims());
    let names: Vec<String> = scene.joint_names().iter().map(|n| json_str(n)).collect();
    let _ = writeln!(s, "  \"joint_names\": [{}],", names.join(", "));
    let _ = writeln!(s, "  \"root_joint\": {},", scene.root_joint());
    s.push_str("  \"persons\": [\n");
    for (pi, person) in scene.persons().iter().enumerate() {
        s.push_str("    {\n");
        let _ = writeln!(s, "      \"person_id\": {},", json_str(person.id()));
        s.push_str("      \"frames\": [\n");
        let frames = person.track().frames();
        for (t, pose) in frames.iter().enumerate() {
            let joints: Vec<String> = (0..pose.num_joints()).map(|j| json_vec(pose.joint(j))).collect();
            let sep = if t + 1 < frames.len() { "," } else { "" };
            let _ = writeln!(s, "        [{}]{sep}", joints.join(", "));
        }
        s.push_str("      ]\n");
        let sep = if pi + 1 < scene.num_persons() { "," } else { "" };
        let _ = writeln!(s, "    }}{sep}");
    }
    match scene.context_raw() {
        None => s.push_str("  ]\n"),
        Some(ctx) => {
            s.push_str("  ],\n  \"context_raw\": [\n");
            for (t, row) in ctx.iter().enumerate() {
                let sep = if t + 1 < ctx.len() { "," } else { "" };
                let _ = writeln!(s, "    {}{sep}", json_vec(row));
            }
            s.push_str("  ]\n");
        }
    }
    s.push_str("}\n");
    s.into_bytes()
}

pub fn read_scene<T: Scalar>(path: impl AsRef<Path>) -> Result<Scene<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&bytes).map_err(|e| match e {
        Error::Parse { path: p, message } => Error::Parse {
            path: format!("{}:{p}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn write_scene<T: Scalar>(path: impl AsRef<Path>, scene: &Scene<T>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_scene(scene)).map_err(|e| Error::io(path, e))
}

/// Reads every `*.json` scene in a directory, sorted by file name.
pub fn read_scene_dir<T: Scalar>(dir: impl AsRef<Path>) -> Result<Vec<Scene<T>>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(read_scene).collect()
}
