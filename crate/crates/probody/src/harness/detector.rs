//! Pseudo-detector: stands in for an image-based body regressor by emitting
//! noisy Gaussian observations of the ground-truth state.
//!
//! The detector draws its noise every frame — occluded or not — so editing
//! occlusion windows or observation payloads never shifts the random stream
//! of other frames. Under partial occlusion the masked dimensions report an
//! inflated variance and a mean frozen at the last visible value; quaternion
//! blocks freeze as a whole if any of their three error dimensions is
//! masked.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scenario::{apply_gaussian_error, OcclusionMode, ScenarioConfig};
use crate::body_model::{
    HumanState, ERROR_DIM, NUM_POSTURE_JOINTS, POSTURE_OFFSET, ROOT_POS_OFFSET, ROOT_ROT_OFFSET,
    SHAPE_DIM,
};
use crate::error::Result;
use crate::prob_state::GaussianBodyState;

pub struct PseudoDetector {
    rng: ChaCha8Rng,
    noise_std: Vec<f64>,
    reported_var: nalgebra::SVector<f64, ERROR_DIM>,
    kappa: f64,
    occlusions: Vec<super::scenario::OcclusionWindow>,
    last_visible: Option<HumanState>,
}

/// Take visible dimensions from `new`, frozen dimensions from `old`.
fn merge_masked(old: &HumanState, new: &HumanState, visible: &[bool]) -> HumanState {
    let mut out = new.clone();
    #[allow(clippy::needless_range_loop)]
    for i in 0..SHAPE_DIM {
        if !visible[i] {
            out.beta[i] = old.beta[i];
        }
    }
    for j in 0..NUM_POSTURE_JOINTS {
        let o = POSTURE_OFFSET + 3 * j;
        if !(visible[o] && visible[o + 1] && visible[o + 2]) {
            out.theta[j] = old.theta[j];
        }
    }
    for (a, vis) in visible[ROOT_POS_OFFSET..ROOT_POS_OFFSET + 3].iter().enumerate() {
        if !vis {
            out.r[a] = old.r[a];
        }
    }
    if !(visible[ROOT_ROT_OFFSET] && visible[ROOT_ROT_OFFSET + 1] && visible[ROOT_ROT_OFFSET + 2]) {
        out.q = old.q;
    }
    out
}

impl PseudoDetector {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PseudoDetector {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            noise_std: cfg.noise_var.iter().map(|v| v.sqrt()).collect(),
            reported_var: cfg.noise_var_vector() * cfg.reported_var_scale,
            kappa: cfg.inflation_kappa,
            occlusions: cfg.occlusions.clone(),
            last_visible: None,
        })
    }

    /// Observation for frame `k`, plus the per-error-dimension visibility
    /// mask (all false for full occlusion).
    pub fn detect(
        &mut self,
        gt: &HumanState,
        frame: usize,
    ) -> Result<(Option<GaussianBodyState>, Vec<bool>)> {
        let noisy = apply_gaussian_error(gt, &self.noise_std, &mut self.rng)?;
        let window = self
            .occlusions
            .iter()
            .find(|w| (w.start..w.end).contains(&frame));

        match window.map(|w| &w.mode) {
            None => {
                self.last_visible = Some(noisy.clone());
                let obs = GaussianBodyState::new(noisy, self.reported_var)?;
                Ok((Some(obs), vec![true; ERROR_DIM]))
            }
            Some(OcclusionMode::Full) => Ok((None, vec![false; ERROR_DIM])),
            Some(OcclusionMode::Partial { dims }) => {
                let mut visible = vec![true; ERROR_DIM];
                for &d in dims {
                    visible[d] = false;
                }
                // Frozen dims keep their last visible value; the merge also
                // becomes the new "last visible" so the visible dims track.
                let mean = match &self.last_visible {
                    Some(old) => merge_masked(old, &noisy, &visible),
                    None => noisy,
                };
                let mut var = self.reported_var;
                for &d in dims {
                    var[d] *= self.kappa;
                }
                self.last_visible = Some(mean.clone());
                Ok((Some(GaussianBodyState::new(mean, var)?), visible))
            }
        }
    }
}
