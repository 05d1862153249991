//! Probabilistic human body state estimation and tracking.
//!
//! The crate estimates a Gaussian distribution over an articulated human
//! body state — shape coefficients, per-joint posture quaternions, and the
//! 6-DoF root pose in the camera frame — and keeps that distribution
//! consistent while the body and the camera both move:
//!
//! * [`geometry`] — quaternion and rigid-transform algebra on minimal
//!   error-state coordinates, with analytic Jacobians.
//! * [`body_model`] — a blendshape + linear-blend-skinning body mesh with
//!   analytic Jacobians of vertices and joints w.r.t. the state.
//! * [`prob_state`] — Gaussian body states and linear propagation of their
//!   covariance to per-vertex / per-joint 3×3 blocks.
//! * [`motion`] — camera/body motion disentanglement in a body-centric
//!   frame and next-state prediction (constant-velocity or GRU).
//! * [`fusion`] — information-form fusion of an image-based and a
//!   motion-based prior, with an optional learned residual and gating.
//! * [`projection`] — perspective projection of joint Gaussians into 2D
//!   image-space Gaussians.
//! * [`objectives`] — the supervision objective terms (NLL, probabilistic
//!   reprojection KL, mean reprojection, shape regularizer) as evaluatable
//!   functions.
//! * [`metrics`] — global/aligned pose metrics, acceleration, and the χ²
//!   (NEES) consistency analysis.
//! * [`harness`] — synthetic sequence generation, a pseudo-detector that
//!   stands in for an image-based regressor, the end-to-end tracker, and
//!   the CLI entry point.
//!
//! See the `examples/` directory for one runnable program per capability
//! and `docs/formats.md` for the file formats.

pub mod body_model;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod motion;
pub mod objectives;
pub mod prob_state;
pub mod projection;

pub use error::{Error, Result};
