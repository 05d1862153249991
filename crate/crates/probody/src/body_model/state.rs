//! Body state vector and its minimal error-space coordinates.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quat_error, retract, Quat, RigidTransform};

/// Number of shape coefficients.
pub const SHAPE_DIM: usize = 10;
/// Joints in the kinematic tree: root plus 23 articulated joints.
pub const NUM_JOINTS: usize = 24;
/// Articulated joints carrying posture quaternions.
pub const NUM_POSTURE_JOINTS: usize = 23;
/// Minimal error dimension: 10 shape + 23·3 posture + 3 position + 3 rotation.
pub const ERROR_DIM: usize = SHAPE_DIM + 3 * NUM_POSTURE_JOINTS + 6;

/// Start of the posture block in error coordinates.
pub const POSTURE_OFFSET: usize = SHAPE_DIM;
/// Start of the root-position block.
pub const ROOT_POS_OFFSET: usize = SHAPE_DIM + 3 * NUM_POSTURE_JOINTS;
/// Start of the root-rotation block.
pub const ROOT_ROT_OFFSET: usize = ROOT_POS_OFFSET + 3;

/// Full body state: shape `β`, posture quaternions `θ` (tree order, joint 1
/// onward), and the root pose of the body frame in the camera frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanState {
    pub beta: [f64; SHAPE_DIM],
    pub theta: Vec<Quat>,
    /// Body origin in the camera frame, meters.
    pub r: Vector3<f64>,
    /// Body orientation in the camera frame.
    pub q: Quat,
}

impl HumanState {
    /// Rest state: zero shape, identity posture, identity root pose.
    pub fn rest() -> Self {
        HumanState {
            beta: [0.0; SHAPE_DIM],
            theta: vec![Quat::identity(); NUM_POSTURE_JOINTS],
            r: Vector3::zeros(),
            q: Quat::identity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.len() != NUM_POSTURE_JOINTS {
            return Err(Error::Dimension(format!(
                "expected {} posture quaternions, got {}",
                NUM_POSTURE_JOINTS,
                self.theta.len()
            )));
        }
        if !self.is_finite() {
            return Err(Error::Dimension("non-finite state component".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.beta.iter().all(|b| b.is_finite())
            && self.r.iter().all(|x| x.is_finite())
            && self.q.imag().iter().all(|x| x.is_finite())
            && self
                .theta
                .iter()
                .all(|t| t.imag().iter().all(|x| x.is_finite()))
    }

    pub fn root_pose(&self) -> RigidTransform {
        RigidTransform::new(self.r, self.q)
    }

    pub fn set_root_pose(&mut self, pose: &RigidTransform) {
        self.r = pose.r;
        self.q = pose.q;
    }

    /// Retract error coordinates onto the state manifold (`self ⊞ e`).
    pub fn apply_error(&self, e: &ErrorCoords) -> Result<HumanState> {
        self.validate()?;
        let mut out = self.clone();
        for i in 0..SHAPE_DIM {
            out.beta[i] += e.0[i];
        }
        for j in 0..NUM_POSTURE_JOINTS {
            let v = e.posture(j);
            out.theta[j] = retract(&self.theta[j], &v)?;
        }
        out.r += e.root_pos();
        out.q = retract(&self.q, &e.root_rot())?;
        Ok(out)
    }

    /// Error coordinates of `other` relative to `self` (`other ⊟ self`), the
    /// inverse of [`HumanState::apply_error`].
    pub fn error_to(&self, other: &HumanState) -> ErrorCoords {
        let mut e = ErrorCoords::zeros();
        for i in 0..SHAPE_DIM {
            e.0[i] = other.beta[i] - self.beta[i];
        }
        for j in 0..NUM_POSTURE_JOINTS {
            let v = quat_error(&self.theta[j], &other.theta[j]).vector();
            e.set_posture(j, &v);
        }
        e.set_root_pos(&(other.r - self.r));
        e.set_root_rot(&quat_error(&self.q, &other.q).vector());
        e
    }
}

/// 85-dimensional error vector on the fixed layout
/// `[δβ(10), δθ(23×3), δr(3), δq_root(3)]`. The ordering is part of the wire
/// contract (covariances, network features, masks all use it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorCoords(pub SVector<f64, ERROR_DIM>);

impl ErrorCoords {
    pub fn zeros() -> Self {
        ErrorCoords(SVector::zeros())
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != ERROR_DIM {
            return Err(Error::Dimension(format!(
                "error coordinates must have length {}, got {}",
                ERROR_DIM,
                v.len()
            )));
        }
        Ok(ErrorCoords(SVector::from_column_slice(v)))
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn posture(&self, joint: usize) -> Vector3<f64> {
        let o = POSTURE_OFFSET + 3 * joint;
        Vector3::new(self.0[o], self.0[o + 1], self.0[o + 2])
    }

    pub fn set_posture(&mut self, joint: usize, v: &Vector3<f64>) {
        let o = POSTURE_OFFSET + 3 * joint;
        self.0[o] = v.x;
        self.0[o + 1] = v.y;
        self.0[o + 2] = v.z;
    }

    pub fn root_pos(&self) -> Vector3<f64> {
        Vector3::new(
            self.0[ROOT_POS_OFFSET],
            self.0[ROOT_POS_OFFSET + 1],
            self.0[ROOT_POS_OFFSET + 2],
        )
    }

    pub fn set_root_pos(&mut self, v: &Vector3<f64>) {
        self.0[ROOT_POS_OFFSET] = v.x;
        self.0[ROOT_POS_OFFSET + 1] = v.y;
        self.0[ROOT_POS_OFFSET + 2] = v.z;
    }

    pub fn root_rot(&self) -> Vector3<f64> {
        Vector3::new(
            self.0[ROOT_ROT_OFFSET],
            self.0[ROOT_ROT_OFFSET + 1],
            self.0[ROOT_ROT_OFFSET + 2],
        )
    }

    pub fn set_root_rot(&mut self, v: &Vector3<f64>) {
        self.0[ROOT_ROT_OFFSET] = v.x;
        self.0[ROOT_ROT_OFFSET + 1] = v.y;
        self.0[ROOT_ROT_OFFSET + 2] = v.z;
    }
}

impl std::ops::Add for ErrorCoords {
    type Output = ErrorCoords;
    fn add(self, rhs: ErrorCoords) -> ErrorCoords {
        ErrorCoords(self.0 + rhs.0)
    }
}
