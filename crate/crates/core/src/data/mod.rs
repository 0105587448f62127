//! Scene data model, pose/offset transforms, file formats, splits and synthetic scenes.

pub mod format;
pub mod joints;
pub mod pose;
pub mod scene;
pub mod split;
pub mod synthetic;

pub use format::{parse_scene, read_scene, read_scene_dir, serialize_scene, write_scene};
pub use joints::JointSet;
pub use pose::{
    accumulate_offsets, center_pose, from_offsets, to_offsets, uncenter_pose, OffsetSequence, Pose,
    PoseSequence,
};
pub use scene::{Person, Scene, SceneBuilder};
pub use split::{Split, SplitManifest, SplitSpec};
pub use synthetic::{generate_synthetic, Scenario, SyntheticConfig};

use crate::error::{Error, Result};

/// Milliseconds per frame assumed when a dataset does not say otherwise (25 fps).
pub const DEFAULT_FRAME_RATE: f64 = 25.0;

/// Maps a horizon in milliseconds to a 1-based future frame index: `round(ms/1000 · fps)`, at least 1.
pub fn ms_to_frame(ms: f64, frame_rate: f64) -> Result<usize> {
    if !(ms.is_finite() && ms > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {ms} ms must be positive")));
    }
    if !(frame_rate.is_finite() && frame_rate > 0.0) {
        return Err(Error::InvalidArgument(format!("frame rate {frame_rate} must be positive")));
    }
    Ok(((ms / 1000.0 * frame_rate).round() as usize).max(1))
}
