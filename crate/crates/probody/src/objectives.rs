//! Supervision objective terms as evaluatable functions.
//!
//! These are analysis/diagnostic functions, not a training loop: the state
//! NLL, the probabilistic 2D reprojection term (Gaussian KL per joint), the
//! mean reprojection term, and the shape regularizer, plus their weighted
//! total. Conventions, fixed across the API: the NLL drops its additive
//! constant and carries no ½ factor (`Σ e²/var + ln var`), while the KL term
//! is the standard closed-form Gaussian divergence with its ½.
//!
//! Ground-truth keypoint densities are Gaussian surrogates
//! ([`Joint2DTarget`]), with a configurable per-joint σ (default 5 px).

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::body_model::HumanState;
use crate::error::{Error, Result};
use crate::prob_state::GaussianBodyState;
use crate::projection::Joint2DGaussian;

/// Weights of the total objective. The shipped defaults are
/// `λ_KL = λ_RP = 1.0`, `λ_β = 0.001`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub kl: f64,
    pub rp: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            kl: 1.0,
            rp: 1.0,
            beta: 0.001,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kl", self.kl), ("rp", self.rp), ("beta", self.beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("loss weight {name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Gaussian surrogate for a ground-truth keypoint density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint2DTarget {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

impl Joint2DTarget {
    pub const DEFAULT_SIGMA_PX: f64 = 5.0;

    pub fn isotropic(mean: Vector2<f64>, sigma_px: f64) -> Self {
        Joint2DTarget {
            mean,
            cov: Matrix2::identity() * sigma_px * sigma_px,
        }
    }
}

/// State negative log-likelihood (constant dropped):
/// `Σᵢ eᵢ²/varᵢ + ln varᵢ` with `e = gt ⊟ mean`.
pub fn nll(s: &GaussianBodyState, gt: &HumanState) -> f64 {
    let e = s.mean.error_to(gt);
    e.0.iter()
        .zip(s.var.iter())
        .map(|(e, v)| e * e / v + v.ln())
        .sum()
}

/// Closed-form KL divergence `KL(pred ‖ tgt)` summed over joints with a
/// valid prediction. Lengths must match; a singular target covariance is an
/// error.
pub fn kl_reprojection(pred: &[Option<Joint2DGaussian>], tgt: &[Joint2DTarget]) -> Result<f64> {
    if pred.len() != tgt.len() {
        return Err(Error::Dimension(format!(
            "{} predictions vs {} targets",
            pred.len(),
            tgt.len()
        )));
    }
    let mut total = 0.0;
    for (i, (p, t)) in pred.iter().zip(tgt).enumerate() {
        let p = match p {
            Some(p) => p,
            None => continue,
        };
        let det_t = t.cov.determinant();
        if det_t <= 0.0 || !det_t.is_finite() {
            return Err(Error::SingularTarget { joint: i });
        }
        let inv_t = t.cov.try_inverse().ok_or(Error::SingularTarget { joint: i })?;
        let d = t.mean - p.mean;
        let det_p = p.cov.determinant();
        total += 0.5
            * ((inv_t * p.cov).trace() + (d.transpose() * inv_t * d)[(0, 0)] - 2.0
                + (det_t / det_p).ln());
    }
    Ok(total)
}

/// Mean reprojection term: `Σᵢ ‖ĥᵢ − hᵢᵍᵗ‖²` over valid joints.
pub fn rp(pred: &[Option<Vector2<f64>>], tgt: &[Vector2<f64>]) -> f64 {
    pred.iter()
        .zip(tgt)
        .filter_map(|(p, t)| p.map(|p| (p - t).norm_squared()))
        .sum()
}

/// Shape regularizer `‖β‖²`.
pub fn beta_reg(beta: &[f64]) -> f64 {
    beta.iter().map(|b| b * b).sum()
}

/// Weighted total objective:
/// `NLL + λ_KL·KL + λ_RP·RP + λ_β·‖β̂‖²`.
pub fn total(
    s: &GaussianBodyState,
    gt: &HumanState,
    pred2d: &[Option<Joint2DGaussian>],
    tgt2d: &[Joint2DTarget],
    w: &LossWeights,
) -> Result<f64> {
    w.validate()?;
    let kl = kl_reprojection(pred2d, tgt2d)?;
    let pred_means: Vec<Option<Vector2<f64>>> = pred2d.iter().map(|p| p.map(|p| p.mean)).collect();
    let tgt_means: Vec<Vector2<f64>> = tgt2d.iter().map(|t| t.mean).collect();
    let rp_term = rp(&pred_means, &tgt_means);
    Ok(nll(s, gt) + w.kl * kl + w.rp * rp_term + w.beta * beta_reg(&s.mean.beta))
}
