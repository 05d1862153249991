//! Camera-disentangled body motion: express the state history as relative
//! transforms between body frames, predict the next state there, and move
//! the prediction back into the current camera frame.
//!
//! A body frame is anchored at the estimated root pose of every time step.
//! Given camera poses `T_WC`, camera-frame root poses chain into world body
//! poses `T_WH = T_WC ∘ T_CH`, and the history is re-expressed relative to
//! the newest body frame: `T_{H_prev H_j} = T_WH_prev⁻¹ ∘ T_WH_j`. Body
//! motion expressed this way is invariant to the camera trajectory, which is
//! what lets one motion model generalize across camera motions. Root-pose
//! covariance rides along through the compose Jacobians; the anchor pose is
//! treated as fixed at its estimate. Posture and shape never touch the
//! frame chain — they are carried through unchanged by construction.

mod gru;

pub use gru::GruWeights;

use nalgebra::{Matrix6, SVector};

use crate::body_model::{ErrorCoords, HumanState, ERROR_DIM, ROOT_POS_OFFSET, SHAPE_DIM};
use crate::error::{Error, Result};
use crate::geometry::{quat_error, transform_jacobians, Quat, RigidTransform};
use crate::prob_state::GaussianBodyState;

/// History window length used by the shipped pipeline.
pub const DEFAULT_HISTORY_LEN: usize = 4;

/// Per-dimension process noise added by the constant-velocity predictor:
/// shape 1e-6, posture 1e-4, position 1e-3 m², rotation 1e-4. Chosen so the
/// motion prior stays informative without overriding a confident
/// observation.
pub fn default_process_noise() -> SVector<f64, ERROR_DIM> {
    let mut q = SVector::repeat(1e-4);
    for i in 0..SHAPE_DIM {
        q[i] = 1e-6;
    }
    for i in ROOT_POS_OFFSET..ROOT_POS_OFFSET + 3 {
        q[i] = 1e-3;
    }
    q
}

/// One tracked state as the tracker stores it: camera pose, timestamp, and
/// the camera-frame state distribution.
#[derive(Clone, Debug)]
pub struct CameraFrameState {
    pub t: f64,
    pub t_wc: RigidTransform,
    pub state: GaussianBodyState,
}

/// Camera-invariant part of a history entry.
#[derive(Clone, Debug)]
pub struct PostureShape {
    pub beta: [f64; SHAPE_DIM],
    pub theta: Vec<Quat>,
    /// Shape + posture error variances, first 79 error dimensions.
    pub var: Vec<f64>,
}

/// One history entry in the body frame of the newest state.
#[derive(Clone, Debug)]
pub struct BodyFrameEntry {
    pub t: f64,
    /// `T_{H_prev H_j}`; the newest entry is the identity.
    pub rel_pose: RigidTransform,
    /// Root-pose covariance transported into the anchor body frame, on
    /// `(position, rotation-error)` coordinates.
    pub rel_cov: Matrix6<f64>,
    pub posture: PostureShape,
}

/// State history re-expressed in the newest body frame, oldest first.
#[derive(Clone, Debug)]
pub struct BodyFrameHistory {
    pub entries: Vec<BodyFrameEntry>,
}

/// Motion-based prior over the next state. The state carries the diagonal
/// variances used by fusion; `root_cov` keeps the full 6×6 root block so
/// frame changes transport covariance without losing the off-diagonal terms
/// they create.
#[derive(Clone, Debug)]
pub struct MotionPrior {
    pub state: GaussianBodyState,
    pub root_cov: Matrix6<f64>,
}

fn root_cov_diag(state: &GaussianBodyState) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for i in 0..6 {
        m[(i, i)] = state.var[ROOT_POS_OFFSET + i];
    }
    m
}

/// Re-express a camera-frame state history as relative body-frame
/// transforms with transported root covariance.
pub fn to_body_frame(frames: &[CameraFrameState]) -> Result<BodyFrameHistory> {
    if frames.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            got: frames.len(),
        });
    }
    for f in frames {
        f.state.validate()?;
    }
    let newest = frames.last().unwrap();
    let anchor = newest.t_wc.compose(&newest.state.mean.root_pose());
    let anchor_inv = anchor.inverse();

    let entries = frames
        .iter()
        .map(|f| {
            // rel = (T_WH_prev⁻¹ ∘ T_WC_j) ∘ T_CH_j; only the second factor
            // is uncertain.
            let a = anchor_inv.compose(&f.t_wc);
            let t_ch = f.state.mean.root_pose();
            let rel_pose = a.compose(&t_ch);
            let (_, j_right) = transform_jacobians(&a, &t_ch);
            let rel_cov = j_right * root_cov_diag(&f.state) * j_right.transpose();
            BodyFrameEntry {
                t: f.t,
                rel_pose,
                rel_cov,
                posture: PostureShape {
                    beta: f.state.mean.beta,
                    theta: f.state.mean.theta.clone(),
                    var: f.state.var.as_slice()[..ROOT_POS_OFFSET].to_vec(),
                },
            }
        })
        .collect();
    Ok(BodyFrameHistory { entries })
}

fn prior_from_parts(
    posture: &PostureShape,
    root: RigidTransform,
    root_cov: Matrix6<f64>,
    q_process: &SVector<f64, ERROR_DIM>,
) -> Result<MotionPrior> {
    let mean = HumanState {
        beta: posture.beta,
        theta: posture.theta.clone(),
        r: root.r,
        q: root.q,
    };
    let mut var = SVector::<f64, ERROR_DIM>::zeros();
    for i in 0..ROOT_POS_OFFSET {
        var[i] = posture.var[i] + q_process[i];
    }
    let mut cov = root_cov;
    for i in 0..6 {
        cov[(i, i)] += q_process[ROOT_POS_OFFSET + i];
        var[ROOT_POS_OFFSET + i] = cov[(i, i)];
    }
    Ok(MotionPrior {
        state: GaussianBodyState::new(mean, var)?,
        root_cov: cov,
    })
}

/// Fractionally scale a rigid delta: `t`-scaled translation and rotation
/// angle. `alpha = 1` reproduces the delta exactly.
fn scale_delta(delta: &RigidTransform, alpha: f64) -> RigidTransform {
    if alpha == 1.0 {
        return *delta;
    }
    RigidTransform::new(delta.r * alpha, delta.q.powf(alpha))
}

/// Constant-velocity prediction in the anchor body frame: extrapolate the
/// last inter-frame delta (time-scaled to `t_next`), carry posture and
/// shape forward, and widen by the process noise `q_process`.
pub fn predict_const_velocity(
    h: &BodyFrameHistory,
    q_process: &SVector<f64, ERROR_DIM>,
    t_next: f64,
) -> Result<MotionPrior> {
    let m = h.entries.len();
    if m < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: m });
    }
    let last = &h.entries[m - 1];
    let prev = &h.entries[m - 2];
    let dt_hist = last.t - prev.t;
    if !dt_hist.is_finite() || dt_hist <= 0.0 {
        return Err(Error::Config(format!(
            "history timestamps must increase, got dt = {dt_hist}"
        )));
    }
    let alpha = (t_next - last.t) / dt_hist;
    // T_{H_{k-2} H_{k-1}} carried one step forward in H_{k-1} coordinates.
    let delta = prev.rel_pose.inverse().compose(&last.rel_pose);
    let pred_root = last.rel_pose.compose(&scale_delta(&delta, alpha));
    prior_from_parts(&last.posture, pred_root, last.rel_cov, q_process)
}

/// GRU prediction in the anchor body frame. Features per step are the 85
/// state coordinates relative to the identity (shape, posture tangents,
/// relative root) followed by the 85 log-variances; the decoder emits a mean
/// delta in error coordinates plus output log-variances.
pub fn predict_gru(h: &BodyFrameHistory, weights: &GruWeights) -> Result<MotionPrior> {
    let m = h.entries.len();
    if m < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: m });
    }
    if weights.input_dim != 2 * ERROR_DIM || weights.decoder_b.len() != 2 * ERROR_DIM {
        return Err(Error::Weights(format!(
            "predictor expects {0}-dimensional input and output features, weights have input {1} / output {2}",
            2 * ERROR_DIM,
            weights.input_dim,
            weights.decoder_b.len()
        )));
    }
    let features: Vec<Vec<f64>> = h.entries.iter().map(featurize).collect();
    let out = weights.run(&features)?;

    let last = &h.entries[m - 1];
    let base = HumanState {
        beta: last.posture.beta,
        theta: last.posture.theta.clone(),
        r: last.rel_pose.r,
        q: last.rel_pose.q,
    };
    let delta = ErrorCoords::from_slice(&out[..ERROR_DIM])?;
    let mean = base.apply_error(&delta)?;
    let mut var = SVector::<f64, ERROR_DIM>::zeros();
    for i in 0..ERROR_DIM {
        var[i] = out[ERROR_DIM + i].exp();
    }
    let mut root_cov = Matrix6::zeros();
    for i in 0..6 {
        root_cov[(i, i)] = var[ROOT_POS_OFFSET + i];
    }
    Ok(MotionPrior {
        state: GaussianBodyState::new(mean, var)?,
        root_cov,
    })
}

fn featurize(e: &BodyFrameEntry) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * ERROR_DIM);
    x.extend_from_slice(&e.posture.beta);
    let id = Quat::identity();
    for t in &e.posture.theta {
        let v = quat_error(&id, t).vector();
        x.extend_from_slice(&[v.x, v.y, v.z]);
    }
    x.extend_from_slice(&[e.rel_pose.r.x, e.rel_pose.r.y, e.rel_pose.r.z]);
    let v = quat_error(&id, &e.rel_pose.q).vector();
    x.extend_from_slice(&[v.x, v.y, v.z]);
    for i in 0..ROOT_POS_OFFSET {
        x.push(e.posture.var[i].ln());
    }
    for i in 0..6 {
        x.push(e.rel_cov[(i, i)].ln());
    }
    x
}

/// Re-express a body-frame prior in the camera frame at time `k`, given the
/// camera pose `T_WC_k` and the anchor body pose `T_WH_prev`.
pub fn to_camera_frame(
    prior: &MotionPrior,
    t_wc_k: &RigidTransform,
    t_wh_prev: &RigidTransform,
) -> Result<MotionPrior> {
    let a = t_wc_k.inverse().compose(t_wh_prev);
    let root = prior.state.mean.root_pose();
    let new_root = a.compose(&root);
    let (_, j_right) = transform_jacobians(&a, &root);
    let root_cov = j_right * prior.root_cov * j_right.transpose();

    let mut mean = prior.state.mean.clone();
    mean.set_root_pose(&new_root);
    let mut var = prior.state.var;
    for i in 0..6 {
        var[ROOT_POS_OFFSET + i] = root_cov[(i, i)];
    }
    Ok(MotionPrior {
        state: GaussianBodyState::new(mean, var)?,
        root_cov,
    })
}
