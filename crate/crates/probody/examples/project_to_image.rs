//! Project 3D joint Gaussians into the image plane and normalize pixel
//! coordinates into the canonical camera.

use nalgebra::SVector;
use probody::body_model::{synth_model, HumanState, ERROR_DIM, POSTURE_OFFSET, ROOT_POS_OFFSET};
use probody::prob_state::{propagate_joints, GaussianBodyState};
use probody::projection::{canonicalize, project_gaussian, CameraModel};

fn main() -> probody::Result<()> {
    let model = synth_model(400, 7)?;
    let cam = CameraModel::new(500.0, 500.0, 320.0, 240.0, 640, 480)?;

    let mut mean = HumanState::rest();
    mean.r.z = 3.0; // stand 3 m in front of the camera
    let mut var = SVector::<f64, ERROR_DIM>::repeat(1e-6);
    for i in POSTURE_OFFSET..ROOT_POS_OFFSET {
        var[i] = 2e-4;
    }
    let state = GaussianBodyState::new(mean, var)?;

    let joints3d = propagate_joints(&model, &state)?;
    let joints2d = project_gaussian(&cam, &joints3d);

    println!("{:>5}  {:>16}  {:>14}  {:>12}", "joint", "pixel", "sigma px", "canonical");
    for (k, j) in joints2d.iter().enumerate() {
        match j {
            Some(g) => {
                let sigma = (g.cov.trace() / 2.0).sqrt();
                let canon = canonicalize(&cam, &g.mean);
                println!(
                    "{k:>5}  ({:6.1}, {:6.1})  {sigma:>14.2}  ({:+.3}, {:+.3})",
                    g.mean.x, g.mean.y, canon.x, canon.y
                );
            }
            None => println!("{k:>5}  behind camera"),
        }
    }

    // Two cameras, one ray: canonical coordinates agree.
    let cam_b = CameraModel::new(900.0, 950.0, 512.0, 384.0, 1024, 768)?;
    let p = joints3d.means[15];
    let a = canonicalize(&cam, &probody::projection::project(&cam, &p)?);
    let b = canonicalize(&cam_b, &probody::projection::project(&cam_b, &p)?);
    println!(
        "\nsame ray through two cameras: canonical coords differ by {:.2e}",
        (a - b).norm()
    );
    Ok(())
}
