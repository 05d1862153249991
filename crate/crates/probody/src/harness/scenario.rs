//! Synthetic scenario generation: smooth ground-truth body and camera
//! trajectories plus pseudo-detector observations, serialized one frame per
//! line.

use nalgebra::{Matrix3, SVector, Vector3};
use serde::{Deserialize, Serialize};

use super::detector::PseudoDetector;
use super::SequenceFrame;
use crate::body_model::{ErrorCoords, HumanState, ERROR_DIM, SHAPE_DIM};
use crate::error::{Error, Result};
use crate::geometry::{Quat, RigidTransform};

/// Ground-truth body motion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyTrajectory {
    Static,
    /// Constant-speed walk along the body's forward axis with a sinusoidal
    /// limb swing.
    Walk {
        speed_mps: f64,
        #[serde(default = "default_swing")]
        swing_amplitude: f64,
    },
    /// Static root with sinusoidally articulated knees, elbows, and spine.
    SinusoidalJoints { amplitude: f64, frequency_hz: f64 },
}

fn default_swing() -> f64 {
    0.3
}

/// Camera motion. Every camera looks at the current body root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CameraTrajectory {
    Static,
    Orbit { radius: f64, angular_speed: f64 },
    Linear { velocity: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionMode {
    /// No observation at all.
    Full,
    /// The listed error dimensions are unobserved: their variance inflates
    /// by κ and their mean freezes at the last visible value.
    Partial { dims: Vec<usize> },
}

/// Frame range `[start, end)` during which the detector is occluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionWindow {
    pub start: usize,
    pub end: usize,
    pub mode: OcclusionMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_frames: usize,
    pub frame_rate_hz: f64,
    pub seed: u64,
    pub body: BodyTrajectory,
    pub camera: CameraTrajectory,
    /// Per-dimension observation noise variance (length 85).
    pub noise_var: Vec<f64>,
    /// Scale on the variance the detector reports relative to the noise it
    /// actually draws: 1.0 is calibrated, 0.25 under-reports fourfold.
    #[serde(default = "default_one")]
    pub reported_var_scale: f64,
    /// Variance inflation for partially occluded dimensions, κ ≥ 1.
    #[serde(default = "default_kappa")]
    pub inflation_kappa: f64,
    #[serde(default)]
    pub occlusions: Vec<OcclusionWindow>,
    #[serde(default = "default_beta")]
    pub beta: [f64; SHAPE_DIM],
}

fn default_one() -> f64 {
    1.0
}

fn default_kappa() -> f64 {
    16.0
}

fn default_beta() -> [f64; SHAPE_DIM] {
    [0.0; SHAPE_DIM]
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_frames: 200,
            frame_rate_hz: 20.0,
            seed: 7,
            body: BodyTrajectory::Walk {
                speed_mps: 1.2,
                swing_amplitude: 0.3,
            },
            camera: CameraTrajectory::Static,
            noise_var: vec![1e-4; ERROR_DIM],
            reported_var_scale: 1.0,
            inflation_kappa: 16.0,
            occlusions: Vec::new(),
            beta: [0.0; SHAPE_DIM],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::Config("n_frames must be positive".into()));
        }
        if !self.frame_rate_hz.is_finite() || self.frame_rate_hz <= 0.0 {
            return Err(Error::Config(format!(
                "frame_rate_hz must be positive, got {}",
                self.frame_rate_hz
            )));
        }
        if self.noise_var.len() != ERROR_DIM {
            return Err(Error::Config(format!(
                "noise_var must have length {}, got {}",
                ERROR_DIM,
                self.noise_var.len()
            )));
        }
        if self.noise_var.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Config("noise_var entries must be positive".into()));
        }
        if !self.reported_var_scale.is_finite() || self.reported_var_scale <= 0.0 {
            return Err(Error::Config("reported_var_scale must be positive".into()));
        }
        if self.inflation_kappa < 1.0 {
            return Err(Error::Config(format!(
                "inflation_kappa must be ≥ 1, got {}",
                self.inflation_kappa
            )));
        }
        for (i, w) in self.occlusions.iter().enumerate() {
            if w.start >= w.end || w.end > self.n_frames {
                return Err(Error::Config(format!(
                    "occlusion window {i} [{}, {}) outside sequence of {} frames",
                    w.start, w.end, self.n_frames
                )));
            }
            if let OcclusionMode::Partial { dims } = &w.mode {
                if dims.is_empty() || dims.iter().any(|d| *d >= ERROR_DIM) {
                    return Err(Error::Config(format!(
                        "occlusion window {i} has invalid dimensions"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn noise_var_vector(&self) -> SVector<f64, ERROR_DIM> {
        SVector::from_column_slice(&self.noise_var)
    }
}

/// Error dimensions covering the posture quaternions of the given joints
/// (joint indices 1..=23), for building partial-occlusion masks.
pub fn error_dims_for_joints(joints: &[usize]) -> Vec<usize> {
    let mut dims = Vec::new();
    for &j in joints {
        if (1..=crate::body_model::NUM_POSTURE_JOINTS).contains(&j) {
            let o = crate::body_model::POSTURE_OFFSET + 3 * (j - 1);
            dims.extend([o, o + 1, o + 2]);
        }
    }
    dims
}

/// Camera-free body ground truth: world root pose plus posture at time `t`.
fn body_at(cfg: &ScenarioConfig, t: f64) -> (RigidTransform, Vec<Quat>) {
    let base = Vector3::new(0.0, 0.9, 0.0);
    let mut theta = vec![Quat::identity(); crate::body_model::NUM_POSTURE_JOINTS];
    match &cfg.body {
        BodyTrajectory::Static => {
            // Mild fixed pose so the mesh is not exactly at rest.
            theta[17] = Quat::from_axis_angle(Vector3::z(), 0.4);
            theta[15] = Quat::from_axis_angle(Vector3::z(), -0.4);
            (RigidTransform::new(base, Quat::identity()), theta)
        }
        BodyTrajectory::Walk {
            speed_mps,
            swing_amplitude,
        } => {
            let pos = base + Vector3::new(0.0, 0.0, speed_mps * t);
            let cadence = 1.4; // strides per second
            let phase = std::f64::consts::TAU * cadence * t;
            let hip = swing_amplitude * phase.sin();
            theta[0] = Quat::from_axis_angle(Vector3::x(), hip);
            theta[1] = Quat::from_axis_angle(Vector3::x(), -hip);
            theta[15] = Quat::from_axis_angle(Vector3::x(), -0.5 * hip);
            theta[16] = Quat::from_axis_angle(Vector3::x(), 0.5 * hip);
            (RigidTransform::new(pos, Quat::identity()), theta)
        }
        BodyTrajectory::SinusoidalJoints {
            amplitude,
            frequency_hz,
        } => {
            let w = std::f64::consts::TAU * frequency_hz;
            for (i, &j) in [3usize, 4, 5, 18, 19].iter().enumerate() {
                let angle = amplitude * (w * t + 0.7 * i as f64).sin();
                theta[j - 1] = Quat::from_axis_angle(Vector3::x(), angle);
            }
            (RigidTransform::new(base, Quat::identity()), theta)
        }
    }
}

/// Right-handed look-at pose: camera +z toward the target, roughly +y up.
fn look_at(eye: Vector3<f64>, target: Vector3<f64>) -> Result<RigidTransform> {
    let forward = target - eye;
    if forward.norm() < 0.5 {
        return Err(Error::Config(format!(
            "camera within 0.5 m of the body at eye {eye:?}"
        )));
    }
    let z = forward.normalize();
    let up = Vector3::y();
    if z.dot(&up).abs() > 0.99 {
        return Err(Error::Config("camera looks straight along the up axis".into()));
    }
    let x = up.cross(&z).normalize();
    let y = z.cross(&x);
    let m = Matrix3::from_columns(&[x, y, z]);
    Ok(RigidTransform::new(eye, Quat::from_rotation_matrix(&m)))
}

fn camera_at(cfg: &ScenarioConfig, t: f64, body_pos: Vector3<f64>) -> Result<RigidTransform> {
    let anchor = Vector3::new(0.0, 1.1, 0.0);
    match &cfg.camera {
        CameraTrajectory::Static => look_at(anchor + Vector3::new(0.0, 0.0, -3.5), body_pos),
        CameraTrajectory::Orbit {
            radius,
            angular_speed,
        } => {
            let a = angular_speed * t + std::f64::consts::PI;
            let eye = anchor + Vector3::new(radius * a.sin(), 0.0, radius * a.cos());
            look_at(eye, body_pos)
        }
        CameraTrajectory::Linear { velocity } => {
            let v = Vector3::new(velocity[0], velocity[1], velocity[2]);
            look_at(anchor + Vector3::new(0.0, 0.0, -3.5) + v * t, body_pos)
        }
    }
}

/// Generate a deterministic synthetic sequence: smooth ground truth, known
/// camera poses, and pseudo-detector observations.
pub fn generate(cfg: &ScenarioConfig) -> Result<Vec<SequenceFrame>> {
    cfg.validate()?;
    let dt = 1.0 / cfg.frame_rate_hz;
    let mut detector = PseudoDetector::new(cfg)?;
    let mut frames = Vec::with_capacity(cfg.n_frames);
    for k in 0..cfg.n_frames {
        let t = k as f64 * dt;
        let (t_wh, theta) = body_at(cfg, t);
        let t_wc = camera_at(cfg, t, t_wh.r)?;
        let t_ch = t_wc.inverse().compose(&t_wh);
        let gt = HumanState {
            beta: cfg.beta,
            theta,
            r: t_ch.r,
            q: t_ch.q,
        };
        let (observation, visibility) = detector.detect(&gt, k)?;
        frames.push(SequenceFrame {
            t,
            t_wc,
            observation,
            gt: Some(gt),
            visibility,
        });
    }
    Ok(frames)
}

/// Ground-truth error draw support shared with tests: `gt ⊞ N(0, noise)`.
pub(crate) fn apply_gaussian_error(
    state: &HumanState,
    std: &[f64],
    rng: &mut impl rand::Rng,
) -> Result<HumanState> {
    use rand_distr::{Distribution, StandardNormal};
    let mut e = ErrorCoords::zeros();
    for (i, s) in std.iter().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        e.0[i] = s * z;
    }
    state.apply_error(&e)
}
