//! Fusion of an image-based and a motion-based body-state prior into a
//! posterior.
//!
//! Both priors are diagonal Gaussians on the error coordinates, so the
//! Kalman update reduces to an information-form product per dimension,
//! linearized at the image mean (the observation dominates whenever the
//! body is visible; the linearization point is configurable only by swapping
//! the arguments). Rotation dimensions fuse in the tangent space at the
//! linearization point; the Mahalanobis gate keeps the involved angles small
//! enough for that to be valid. A pluggable residual adds a learned,
//! state-dependent correction to the fused mean — the only mechanism for
//! cross-dimension coupling, zero by default.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::body_model::{ErrorCoords, HumanState, ERROR_DIM};
use crate::error::{Error, Result};
use crate::prob_state::GaussianBodyState;

/// χ²(85) quantile at 0.999, the default gate threshold.
pub const GATE_CHI2_999_85: f64 = 131.04120374833502;

/// Learned residual hook: `(image prior, motion prior, Kalman-fused mean) →
/// additive correction in error coordinates`.
pub type ResidualFn =
    Box<dyn Fn(&GaussianBodyState, &GaussianBodyState, &HumanState) -> ErrorCoords + Send + Sync>;

/// Fusion configuration.
///
/// `residual: None` means the zero residual (plain Kalman posterior mean).
/// `gate_threshold: Some(t)` rejects motion priors whose Mahalanobis
/// statistic against the image prior exceeds `t`; a rejected fusion returns
/// the image prior unchanged.
#[derive(Default)]
pub struct FusionConfig {
    pub residual: Option<ResidualFn>,
    pub gate_threshold: Option<f64>,
}

impl FusionConfig {
    pub fn gated(threshold: f64) -> Self {
        FusionConfig {
            residual: None,
            gate_threshold: Some(threshold),
        }
    }
}

/// Mahalanobis gate between two diagonal Gaussians:
/// `statistic = Σᵢ δᵢ² / (var_I + var_M)ᵢ`; accept iff below `threshold`.
pub fn mahalanobis_gate(
    img: &GaussianBodyState,
    mot: &GaussianBodyState,
    threshold: f64,
) -> (bool, f64) {
    let delta = img.mean.error_to(&mot.mean);
    let mut stat = 0.0;
    for i in 0..ERROR_DIM {
        stat += delta.0[i] * delta.0[i] / (img.var[i] + mot.var[i]);
    }
    (stat <= threshold, stat)
}

/// Fuse the two priors: information-form Kalman update plus the configured
/// residual. Inputs must be expressed in the same (camera) frame.
pub fn fuse(
    img: &GaussianBodyState,
    mot: &GaussianBodyState,
    cfg: &FusionConfig,
) -> Result<GaussianBodyState> {
    if !img.is_finite() || !mot.is_finite() {
        return Err(Error::NonFinite);
    }
    if let Some(threshold) = cfg.gate_threshold {
        let (accept, _) = mahalanobis_gate(img, mot, threshold);
        if !accept {
            return Ok(img.clone());
        }
    }

    let delta = img.mean.error_to(&mot.mean);
    let mut fused_var = SVector::<f64, ERROR_DIM>::zeros();
    let mut step = ErrorCoords::zeros();
    for i in 0..ERROR_DIM {
        let (vi, vm) = (img.var[i], mot.var[i]);
        fused_var[i] = vi * vm / (vi + vm);
        // fused_var/var_M = var_I/(var_I + var_M): the Kalman gain weight.
        step.0[i] = vi / (vi + vm) * delta.0[i];
    }

    let correction = match &cfg.residual {
        Some(residual) => {
            let kalman_mean = img.mean.apply_error(&step)?;
            residual(img, mot, &kalman_mean)
        }
        None => ErrorCoords::zeros(),
    };
    let mean = img
        .mean
        .apply_error(&(step + correction))
        .map_err(|_| Error::NonFinite)?;

    GaussianBodyState::new(mean, fused_var)
}

/// Serialized multilayer perceptron used as a learned fusion residual:
/// affine layers with tanh between them and an identity output layer.
///
/// The input featurization is fixed and documented:
/// `[mot ⊟ img (85), ln var_I (85), ln var_M (85)]` (255 values); the output
/// is an 85-vector correction in error coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpWeights {
    pub layers: Vec<MlpLayer>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpLayer {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows×cols`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl MlpWeights {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let w: MlpWeights = serde_json::from_str(&raw)?;
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Weights("residual MLP has no layers".into()));
        }
        let mut dim = 3 * ERROR_DIM;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.cols != dim {
                return Err(Error::Weights(format!(
                    "layer {i} expects {} inputs, previous layer provides {dim}",
                    layer.cols
                )));
            }
            if layer.weight.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
                return Err(Error::Weights(format!("layer {i} has inconsistent shapes")));
            }
            dim = layer.rows;
        }
        if dim != ERROR_DIM {
            return Err(Error::Weights(format!(
                "residual MLP must output {ERROR_DIM} values, got {dim}"
            )));
        }
        Ok(())
    }

    fn forward(&self, mut x: Vec<f64>) -> Vec<f64> {
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.bias.clone();
            for (r, out) in y.iter_mut().enumerate() {
                let row = &layer.weight[r * layer.cols..(r + 1) * layer.cols];
                *out += row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
            }
            if i + 1 < self.layers.len() {
                for v in y.iter_mut() {
                    *v = v.tanh();
                }
            }
            x = y;
        }
        x
    }

    /// Wrap into the [`FusionConfig`] residual hook.
    pub fn into_residual(self) -> Result<ResidualFn> {
        self.validate()?;
        Ok(Box::new(move |img, mot, _fused| {
            let delta = img.mean.error_to(&mot.mean);
            let mut x = Vec::with_capacity(3 * ERROR_DIM);
            x.extend_from_slice(delta.as_slice());
            x.extend(img.var.iter().map(|v| v.ln()));
            x.extend(mot.var.iter().map(|v| v.ln()));
            let y = self.forward(x);
            ErrorCoords::from_slice(&y).expect("validated MLP output length")
        }))
    }
}
