//! End-to-end harness: synthetic sequences, the pseudo-detector standing in
//! for an image-based regressor, the causal tracker, evaluation, and the
//! CLI.
//!
//! Sequences stream as JSONL, one [`SequenceFrame`] per line, so they never
//! need a full in-memory load on the way in or out. The whole
//! simulate → track → evaluate pipeline is bit-reproducible for a fixed
//! seed; randomness is confined to the pseudo-detector's seeded stream.

pub mod bench;
pub mod cli;
mod detector;
mod evaluate;
mod io;
mod scenario;
mod tracker;

pub use detector::PseudoDetector;
pub use evaluate::{chi2_consistency, evaluate, PosteriorRecord};
pub use io::{read_jsonl, read_posteriors, read_sequence, write_jsonl};
pub use scenario::{
    error_dims_for_joints, generate, BodyTrajectory, CameraTrajectory, OcclusionMode,
    OcclusionWindow, ScenarioConfig,
};
pub use tracker::{Predictor, TrackOutput, Tracker, TrackerConfig};

use serde::{Deserialize, Serialize};

use crate::body_model::HumanState;
use crate::geometry::RigidTransform;
use crate::prob_state::GaussianBodyState;

/// One frame of a sequence: timestamp, known camera pose, the detector's
/// observation (absent under full occlusion), optional ground truth, and the
/// per-error-dimension visibility mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFrame {
    pub t: f64,
    #[serde(rename = "T_WC")]
    pub t_wc: RigidTransform,
    pub observation: Option<GaussianBodyState>,
    pub gt: Option<HumanState>,
    pub visibility: Vec<bool>,
}
