//! Build a synthetic body model, pose it, and check the analytic vertex
//! Jacobian against finite differences at one coordinate.

use nalgebra::Vector3;
use probody::body_model::{synth_model, ErrorCoords, HumanState, POSTURE_OFFSET};
use probody::geometry::Quat;

fn main() -> probody::Result<()> {
    let model = synth_model(600, 7)?;
    println!(
        "synthetic model: {} vertices, {} joints",
        model.n_vertices(),
        model.n_joints()
    );

    // Bend the left knee and raise the right arm.
    let mut state = HumanState::rest();
    state.theta[3] = Quat::from_axis_angle(Vector3::x(), 0.9); // joint 4
    state.theta[16] = Quat::from_axis_angle(Vector3::z(), -1.2); // joint 17
    state.r = Vector3::new(0.0, 0.0, 3.0);

    let (joints, vertices) = model.forward(&state)?;
    let bbox_min = vertices.iter().fold(Vector3::repeat(f64::MAX), |a, v| a.inf(v));
    let bbox_max = vertices.iter().fold(Vector3::repeat(f64::MIN), |a, v| a.sup(v));
    println!(
        "posed bounding box: ({:+.2},{:+.2},{:+.2}) .. ({:+.2},{:+.2},{:+.2}) m",
        bbox_min.x, bbox_min.y, bbox_min.z, bbox_max.x, bbox_max.y, bbox_max.z
    );
    println!("left ankle (joint 7) moved to ({:+.2}, {:+.2}, {:+.2})", joints[7].x, joints[7].y, joints[7].z);

    // Analytic Jacobian vs a finite difference on the knee's x rotation.
    let j = model.vertex_jacobian(&state)?;
    let dim = POSTURE_OFFSET + 3 * 3; // joint 4, x component
    let h = 1e-6;
    let mut ep = ErrorCoords::zeros();
    ep.0[dim] = h;
    let mut em = ErrorCoords::zeros();
    em.0[dim] = -h;
    let vp = model.to_camera(&state.apply_error(&ep)?)?;
    let vm = model.to_camera(&state.apply_error(&em)?)?;
    let vertex = 6; // on the left shin segment in the synthetic layout
    let fd = (vp[vertex] - vm[vertex]) / (2.0 * h);
    println!(
        "d(vertex {vertex})/d(knee x error): analytic ({:+.4}, {:+.4}, {:+.4}), finite diff ({:+.4}, {:+.4}, {:+.4})",
        j[(3 * vertex, dim)],
        j[(3 * vertex + 1, dim)],
        j[(3 * vertex + 2, dim)],
        fd.x,
        fd.y,
        fd.z
    );
    Ok(())
}
