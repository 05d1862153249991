//! Disentangle body motion from camera motion and predict the next state,
//! with the constant-velocity predictor and with GRU weights from a file.

use nalgebra::Vector3;
use probody::geometry::{Quat, RigidTransform};
use probody::motion::{
    default_process_noise, predict_const_velocity, predict_gru, to_body_frame, to_camera_frame,
    CameraFrameState, GruWeights,
};
use probody::prob_state::GaussianBodyState;

fn main() -> probody::Result<()> {
    // A body walking +x in the world while the camera pans: four tracked
    // states in camera coordinates.
    let dt = 0.05;
    let mut history = Vec::new();
    for k in 0..4 {
        let t = k as f64 * dt;
        let body_w = RigidTransform::new(Vector3::new(0.6 * t, 0.9, 0.0), Quat::identity());
        let cam_w = RigidTransform::new(
            Vector3::new(0.0, 1.0, -3.0),
            Quat::from_axis_angle(Vector3::y(), 0.1 * t),
        );
        let mut state = probody::body_model::HumanState::rest();
        state.set_root_pose(&cam_w.inverse().compose(&body_w));
        history.push(CameraFrameState {
            t,
            t_wc: cam_w,
            state: GaussianBodyState::isotropic(state, 1e-4)?,
        });
    }

    let h = to_body_frame(&history)?;
    println!("relative body-frame transforms (camera motion removed):");
    for (j, e) in h.entries.iter().enumerate() {
        println!(
            "  step {j}: moved ({:+.3}, {:+.3}, {:+.3}) m relative to the newest body frame",
            e.rel_pose.r.x, e.rel_pose.r.y, e.rel_pose.r.z
        );
    }

    let prior_h = predict_const_velocity(&h, &default_process_noise(), 4.0 * dt)?;
    println!(
        "constant-velocity prediction: ({:+.3}, {:+.3}, {:+.3}) m ahead in the body frame",
        prior_h.state.mean.r.x, prior_h.state.mean.r.y, prior_h.state.mean.r.z
    );

    // Back into the next camera frame.
    let next_cam = RigidTransform::new(
        Vector3::new(0.0, 1.0, -3.0),
        Quat::from_axis_angle(Vector3::y(), 0.1 * 4.0 * dt),
    );
    let newest = history.last().unwrap();
    let t_wh = newest.t_wc.compose(&newest.state.mean.root_pose());
    let prior_c = to_camera_frame(&prior_h, &next_cam, &t_wh)?;
    println!(
        "re-expressed in the next camera: ({:+.3}, {:+.3}, {:+.3}) m",
        prior_c.state.mean.r.x, prior_c.state.mean.r.y, prior_c.state.mean.r.z
    );

    // The GRU path uses the same history featurization.
    let weights_path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/gru_weights.json");
    let weights = GruWeights::load(&weights_path)?;
    let gru_prior = predict_gru(&h, &weights)?;
    println!(
        "GRU prediction (untrained demo weights): ({:+.3}, {:+.3}, {:+.3}) m",
        gru_prior.state.mean.r.x, gru_prior.state.mean.r.y, gru_prior.state.mean.r.z
    );
    Ok(())
}
