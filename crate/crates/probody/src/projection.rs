//! Perspective projection of 3D point Gaussians into 2D image-space
//! Gaussians, plus canonical-camera coordinate normalization.
//!
//! There are no images in this pipeline, so lens rectification reduces to an
//! affine change of intrinsics: pixel coordinates from any physical camera
//! map to a canonical camera with focal length [`CANONICAL_FOCAL`] and a
//! centered principal point, making 2D losses intrinsics-independent.

use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob_state::PointCloudGaussian;

/// Minimum depth in front of the camera, meters. Points at or behind this
/// plane are rejected rather than clamped: a behind-camera joint signals
/// occlusion or field-of-view exit, which callers act on.
pub const DEFAULT_Z_MIN: f64 = 0.05;

/// Focal length of the canonical (virtual) camera, pixels.
pub const CANONICAL_FOCAL: f64 = 500.0;

/// Pinhole camera intrinsics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::Config(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        Ok(CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }
}

/// Gaussian over a 2D joint position, pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint2DGaussian {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

/// Perspective projection `[fx·x/z + cx, fy·y/z + cy]`.
pub fn project(cam: &CameraModel, p: &Vector3<f64>) -> Result<Vector2<f64>> {
    if p.z <= DEFAULT_Z_MIN {
        return Err(Error::BehindCamera { z: p.z });
    }
    Ok(Vector2::new(
        cam.fx * p.x / p.z + cam.cx,
        cam.fy * p.y / p.z + cam.cy,
    ))
}

/// Jacobian of [`project`] with respect to the 3D point.
pub fn project_jacobian(cam: &CameraModel, p: &Vector3<f64>) -> Result<Matrix2x3<f64>> {
    if p.z <= DEFAULT_Z_MIN {
        return Err(Error::BehindCamera { z: p.z });
    }
    let z2 = p.z * p.z;
    Ok(Matrix2x3::new(
        cam.fx / p.z,
        0.0,
        -cam.fx * p.x / z2,
        0.0,
        cam.fy / p.z,
        -cam.fy * p.y / z2,
    ))
}

/// Project each point Gaussian to the image plane: mean through the pinhole
/// map, covariance through its Jacobian. Behind-camera points come back as
/// `None` and are skipped by the losses.
pub fn project_gaussian(cam: &CameraModel, cloud: &PointCloudGaussian) -> Vec<Option<Joint2DGaussian>> {
    cloud
        .means
        .iter()
        .zip(&cloud.cov_blocks)
        .map(|(m, block)| {
            let mean = project(cam, m).ok()?;
            let j = project_jacobian(cam, m).ok()?;
            Some(Joint2DGaussian {
                mean,
                cov: j * block * j.transpose(),
            })
        })
        .collect()
}

/// Map a pixel into the canonical camera: `f₀·[(u−cx)/fx, (v−cy)/fy]`.
pub fn canonicalize(cam: &CameraModel, pixel: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(
        CANONICAL_FOCAL * (pixel.x - cam.cx) / cam.fx,
        CANONICAL_FOCAL * (pixel.y - cam.cy) / cam.fy,
    )
}

/// Inverse of [`canonicalize`].
pub fn decanonicalize(cam: &CameraModel, canonical: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(
        canonical.x * cam.fx / CANONICAL_FOCAL + cam.cx,
        canonical.y * cam.fy / CANONICAL_FOCAL + cam.cy,
    )
}
