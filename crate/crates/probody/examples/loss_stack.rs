//! Evaluate the full supervision objective on a synthetic prediction:
//! state NLL, probabilistic reprojection KL, mean reprojection, and the
//! shape regularizer.

use nalgebra::{SVector, Vector2};
use probody::body_model::{synth_model, ErrorCoords, HumanState, ERROR_DIM};
use probody::objectives::{beta_reg, kl_reprojection, nll, rp, total, Joint2DTarget, LossWeights};
use probody::prob_state::{propagate_joints, GaussianBodyState};
use probody::projection::{project_gaussian, CameraModel};

fn main() -> probody::Result<()> {
    let model = synth_model(400, 7)?;
    let cam = CameraModel::new(500.0, 500.0, 320.0, 240.0, 640, 480)?;

    // Ground truth and a slightly-off prediction with honest variances.
    let mut gt = HumanState::rest();
    gt.r.z = 3.0;
    let mut offset = ErrorCoords::zeros();
    for i in 0..ERROR_DIM {
        offset.0[i] = 0.01 * ((i as f64 * 0.7).sin() + 1.2) * if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    let pred_mean = gt.apply_error(&offset)?;
    let pred = GaussianBodyState::new(pred_mean, SVector::<f64, ERROR_DIM>::repeat(2e-3))?;

    // 2D: predicted joint Gaussians vs Gaussian targets around the
    // ground-truth keypoints (σ = 5 px).
    let pred2d = project_gaussian(&cam, &propagate_joints(&model, &pred)?);
    let gt_joints = model.joints_in_camera(&gt)?;
    let targets: Vec<Joint2DTarget> = gt_joints
        .iter()
        .map(|p| {
            let px = probody::projection::project(&cam, p).unwrap();
            Joint2DTarget::isotropic(px, Joint2DTarget::DEFAULT_SIGMA_PX)
        })
        .collect();
    let pred_means: Vec<Option<Vector2<f64>>> = pred2d.iter().map(|g| g.map(|g| g.mean)).collect();
    let tgt_means: Vec<Vector2<f64>> = targets.iter().map(|t| t.mean).collect();

    let weights = LossWeights::default();
    println!("NLL           : {:10.3}", nll(&pred, &gt));
    println!("KL (2D)       : {:10.3}", kl_reprojection(&pred2d, &targets)?);
    println!("RP (px^2)     : {:10.3}", rp(&pred_means, &tgt_means));
    println!("beta reg      : {:10.3}", beta_reg(&pred.mean.beta));
    println!(
        "total         : {:10.3}   (weights kl={}, rp={}, beta={})",
        total(&pred, &gt, &pred2d, &targets, &weights)?,
        weights.kl,
        weights.rp,
        weights.beta
    );

    // The NLL rewards exactly honest variances: minimum at var = e².
    let e = pred.mean.error_to(&gt);
    let honest: SVector<f64, ERROR_DIM> = SVector::from_iterator(e.0.iter().map(|x| x * x));
    for scale in [0.25, 1.0, 4.0] {
        let mut s = pred.clone();
        s.var = honest * scale;
        println!("NLL with var = {scale:4}·e²: {:10.3}", nll(&s, &gt));
    }
    Ok(())
}
