//! Causal single-person tracker: per frame, build a motion prior from the
//! state history, fuse it with the observation if one is present, otherwise
//! let the prior pass through unfused.
//!
//! Bootstrapping: the first visible observation becomes the posterior
//! verbatim. Until then the tracker is waiting and emits nothing. One
//! tracker instance is driven by one logical thread; instances are
//! independent and freely movable across threads.

use std::collections::VecDeque;

use nalgebra::SVector;

use super::SequenceFrame;
use crate::body_model::ERROR_DIM;
use crate::error::{Error, Result};
use crate::fusion::{fuse, FusionConfig};
use crate::geometry::RigidTransform;
use crate::motion::{
    default_process_noise, predict_const_velocity, predict_gru, to_body_frame, to_camera_frame,
    CameraFrameState, GruWeights, MotionPrior, DEFAULT_HISTORY_LEN,
};
use crate::prob_state::GaussianBodyState;

/// Motion predictor choice. `None` is the image-only baseline: during
/// occlusion the last camera-frame posterior is frozen in place.
#[allow(clippy::large_enum_variant)]
pub enum Predictor {
    ConstVelocity,
    Gru(GruWeights),
    None,
}

pub struct TrackerConfig {
    pub history_len: usize,
    pub process_noise: SVector<f64, ERROR_DIM>,
    pub predictor: Predictor,
    pub fusion: FusionConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            history_len: DEFAULT_HISTORY_LEN,
            process_noise: default_process_noise(),
            predictor: Predictor::ConstVelocity,
            fusion: FusionConfig::default(),
        }
    }
}

/// Posterior for one frame, reported in the camera frame plus the world-frame
/// root pose derived through the known camera pose.
#[derive(Clone, Debug)]
pub struct TrackOutput {
    pub posterior: GaussianBodyState,
    pub world_root: RigidTransform,
}

pub struct Tracker {
    cfg: TrackerConfig,
    history: VecDeque<CameraFrameState>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Tracker {
            cfg,
            history: VecDeque::new(),
        }
    }

    pub fn is_initialized(&self) -> bool {
        !self.history.is_empty()
    }

    fn motion_prior(&self, frame: &SequenceFrame) -> Result<MotionPrior> {
        let mut frames: Vec<CameraFrameState> = self.history.iter().cloned().collect();
        if frames.len() == 1 {
            // Static pseudo-history: duplicating the single entry one frame
            // into the past makes the extrapolated delta the identity.
            let mut ghost = frames[0].clone();
            let dt = (frame.t - frames[0].t).max(1e-6);
            ghost.t = frames[0].t - dt;
            frames.insert(0, ghost);
        }
        let h = to_body_frame(&frames)?;
        let prior_h = match &self.cfg.predictor {
            Predictor::ConstVelocity => {
                predict_const_velocity(&h, &self.cfg.process_noise, frame.t)?
            }
            Predictor::Gru(weights) => predict_gru(&h, weights)?,
            Predictor::None => unreachable!("image-only tracking never builds a prior"),
        };
        let newest = self.history.back().unwrap();
        let t_wh_prev = newest.t_wc.compose(&newest.state.mean.root_pose());
        to_camera_frame(&prior_h, &frame.t_wc, &t_wh_prev)
    }

    /// Process one frame. Returns `None` while waiting for the first
    /// observation.
    pub fn step(&mut self, frame: &SequenceFrame) -> Result<Option<TrackOutput>> {
        if let Some(last) = self.history.back() {
            if frame.t <= last.t {
                return Err(Error::Config(format!(
                    "non-increasing frame time {} after {}",
                    frame.t, last.t
                )));
            }
        }
        let posterior = match (&frame.observation, self.history.is_empty()) {
            (None, true) => return Ok(None),
            (Some(obs), true) => {
                obs.validate()?;
                obs.clone()
            }
            (obs, false) => match &self.cfg.predictor {
                Predictor::None => match obs {
                    Some(o) => {
                        o.validate()?;
                        o.clone()
                    }
                    None => self.history.back().unwrap().state.clone(),
                },
                _ => {
                    let prior = self.motion_prior(frame)?;
                    match obs {
                        Some(o) => fuse(o, &prior.state, &self.cfg.fusion)?,
                        None => prior.state,
                    }
                }
            },
        };

        self.history.push_back(CameraFrameState {
            t: frame.t,
            t_wc: frame.t_wc,
            state: posterior.clone(),
        });
        while self.history.len() > self.cfg.history_len {
            self.history.pop_front();
        }
        let world_root = frame.t_wc.compose(&posterior.mean.root_pose());
        Ok(Some(TrackOutput {
            posterior,
            world_root,
        }))
    }
}
