//! Fuse an image-based and a motion-based prior, with and without the
//! Mahalanobis gate, and show the information gain.

use nalgebra::Vector3;
use probody::body_model::{ErrorCoords, HumanState, ERROR_DIM, ROOT_POS_OFFSET};
use probody::fusion::{fuse, mahalanobis_gate, FusionConfig, GATE_CHI2_999_85};
use probody::prob_state::GaussianBodyState;

fn main() -> probody::Result<()> {
    let mut img_mean = HumanState::rest();
    img_mean.r = Vector3::new(0.1, 0.0, 3.0);
    let img = GaussianBodyState::isotropic(img_mean.clone(), 1e-3)?;

    // Motion prior 4 cm away in x, twice as uncertain.
    let mut delta = ErrorCoords::zeros();
    delta.0[ROOT_POS_OFFSET] = 0.04;
    let mot = GaussianBodyState::isotropic(img_mean.apply_error(&delta)?, 2e-3)?;

    let fused = fuse(&img, &mot, &FusionConfig::default())?;
    println!("image prior x:  {:+.4} m  (var {:.1e})", img.mean.r.x, img.var[ROOT_POS_OFFSET]);
    println!("motion prior x: {:+.4} m  (var {:.1e})", mot.mean.r.x, mot.var[ROOT_POS_OFFSET]);
    println!(
        "posterior x:    {:+.4} m  (var {:.1e})  — pulled 1/3 of the way, variance below both",
        fused.mean.r.x,
        fused.var[ROOT_POS_OFFSET]
    );

    // A wildly inconsistent motion prior trips the gate and is rejected.
    let mut wild = ErrorCoords::zeros();
    for i in 0..ERROR_DIM {
        wild.0[i] = 0.08;
    }
    let outlier = GaussianBodyState::isotropic(img_mean.apply_error(&wild)?, 2e-3)?;
    let (accept, stat) = mahalanobis_gate(&img, &outlier, GATE_CHI2_999_85);
    println!(
        "outlier prior: statistic {stat:.1} vs gate {GATE_CHI2_999_85:.1} → accept = {accept}"
    );
    let gated = fuse(&img, &outlier, &FusionConfig::gated(GATE_CHI2_999_85))?;
    println!(
        "gated fusion returns the image prior unchanged: x = {:+.4} m",
        gated.mean.r.x
    );
    Ok(())
}
