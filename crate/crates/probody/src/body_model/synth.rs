//! Procedurally generated body model.
//!
//! Nothing here is learned or licensed: the generator lays capsules of
//! vertices along a fixed humanoid skeleton with the standard 24-joint
//! topology, so tests and the CLI run without restricted assets. Models are
//! byte-deterministic in `(n_vertices, seed)`.

use nalgebra::Vector3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BodyModel, BodyModelData, NUM_JOINTS, SHAPE_DIM};
use crate::error::{Error, Result};

/// Rest positions of the 24 joints, meters. Y is up, X is the body's left.
const CANONICAL_JOINTS: [[f64; 3]; NUM_JOINTS] = [
    [0.00, 0.00, 0.00],   // 0  pelvis
    [0.09, -0.05, 0.00],  // 1  left hip
    [-0.09, -0.05, 0.00], // 2  right hip
    [0.00, 0.11, 0.00],   // 3  spine1
    [0.10, -0.45, 0.00],  // 4  left knee
    [-0.10, -0.45, 0.00], // 5  right knee
    [0.00, 0.23, 0.00],   // 6  spine2
    [0.10, -0.85, 0.00],  // 7  left ankle
    [-0.10, -0.85, 0.00], // 8  right ankle
    [0.00, 0.29, 0.00],   // 9  spine3
    [0.11, -0.90, 0.12],  // 10 left foot
    [-0.11, -0.90, 0.12], // 11 right foot
    [0.00, 0.45, 0.00],   // 12 neck
    [0.07, 0.40, 0.00],   // 13 left collar
    [-0.07, 0.40, 0.00],  // 14 right collar
    [0.00, 0.58, 0.00],   // 15 head
    [0.17, 0.42, 0.00],   // 16 left shoulder
    [-0.17, 0.42, 0.00],  // 17 right shoulder
    [0.43, 0.42, 0.00],   // 18 left elbow
    [-0.43, 0.42, 0.00],  // 19 right elbow
    [0.68, 0.42, 0.00],   // 20 left wrist
    [-0.68, 0.42, 0.00],  // 21 right wrist
    [0.76, 0.42, 0.00],   // 22 left hand
    [-0.76, 0.42, 0.00],  // 23 right hand
];

/// Standard kinematic tree: parent of each joint, -1 for the root.
const PARENTS: [i64; NUM_JOINTS] = [
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
];

/// Torso/neck/head segments get a thicker capsule radius than the limbs.
const THICK_CHILDREN: [usize; 5] = [3, 6, 9, 12, 15];

fn joint(k: usize) -> Vector3<f64> {
    Vector3::new(CANONICAL_JOINTS[k][0], CANONICAL_JOINTS[k][1], CANONICAL_JOINTS[k][2])
}

/// Deterministic blendshape columns: the first three scale/stretch the body,
/// the rest add smooth low-amplitude ripples.
fn shape_dir(pos: &Vector3<f64>, i: usize) -> Vector3<f64> {
    match i {
        0 => 0.05 * pos,
        1 => Vector3::new(0.0, 0.08 * pos.y, 0.0),
        2 => Vector3::new(0.06 * pos.x, 0.0, 0.02 * pos.z),
        _ => {
            let m = (i - 2) as f64;
            let a = m * (1.3 * pos.y + 0.7 * pos.x);
            let b = m * (0.9 * pos.z + 0.4 * pos.y) + m;
            Vector3::new(0.02 * a.sin(), 0.02 * b.cos(), 0.02 * (a + b).sin())
        }
    }
}

/// Generate a deterministic capsule-limb model with `n_vertices` vertices.
pub fn synth_model(n_vertices: usize, seed: u64) -> Result<BodyModel> {
    if n_vertices < NUM_JOINTS {
        return Err(Error::Config(format!(
            "synth model needs at least {NUM_JOINTS} vertices, got {n_vertices}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // One bone per non-root joint: (owner = parent joint, tip = the joint).
    let bones: Vec<(usize, usize)> = (1..NUM_JOINTS).map(|c| (PARENTS[c] as usize, c)).collect();

    let mut template = Vec::with_capacity(n_vertices);
    let mut skin_weights = Vec::with_capacity(n_vertices);
    for v in 0..n_vertices {
        let (owner, tip) = bones[v % bones.len()];
        let a = joint(owner);
        let b = joint(tip);
        let axis = b - a;
        let t: f64 = rng.gen::<f64>();
        let phi: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let (r_min, r_max) = if THICK_CHILDREN.contains(&tip) {
            (0.07, 0.13)
        } else {
            (0.03, 0.06)
        };
        let rho: f64 = r_min + rng.gen::<f64>() * (r_max - r_min);

        // Orthonormal frame perpendicular to the bone axis.
        let dir = if axis.norm() > 1e-12 {
            axis.normalize()
        } else {
            Vector3::y()
        };
        let pick = if dir.x.abs() < 0.9 { Vector3::x() } else { Vector3::z() };
        let u = dir.cross(&pick).normalize();
        let w = dir.cross(&u);
        let pos = a + t * axis + rho * (phi.cos() * u + phi.sin() * w);
        template.push([pos.x, pos.y, pos.z]);

        // The owner joint drives the segment; blend into the tip joint near
        // the far end so adjacent segments deform smoothly.
        let w_tip = 0.5 * ((t - 0.6) / 0.4).clamp(0.0, 1.0);
        let mut row = vec![0.0; NUM_JOINTS];
        row[owner] = 1.0 - w_tip;
        if w_tip > 0.0 {
            row[tip] = w_tip;
        }
        skin_weights.push(row);
    }

    // Regress each joint from its nearest template vertices.
    let m = (n_vertices / (2 * NUM_JOINTS)).clamp(1, 40);
    let mut joint_regressor = Vec::with_capacity(NUM_JOINTS);
    for k in 0..NUM_JOINTS {
        let target = joint(k);
        let mut order: Vec<usize> = (0..n_vertices).collect();
        order.sort_by(|&a, &b| {
            let da = (Vector3::new(template[a][0], template[a][1], template[a][2]) - target).norm();
            let db = (Vector3::new(template[b][0], template[b][1], template[b][2]) - target).norm();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let mut row = vec![0.0; n_vertices];
        for &v in order.iter().take(m) {
            row[v] = 1.0 / m as f64;
        }
        joint_regressor.push(row);
    }

    let shape_dirs = template
        .iter()
        .map(|v| {
            let pos = Vector3::new(v[0], v[1], v[2]);
            let mut rows = [[0.0; SHAPE_DIM]; 3];
            #[allow(clippy::needless_range_loop)]
            for i in 0..SHAPE_DIM {
                let d = shape_dir(&pos, i);
                rows[0][i] = d.x;
                rows[1][i] = d.y;
                rows[2][i] = d.z;
            }
            rows
        })
        .collect();

    BodyModel::from_data(BodyModelData {
        template,
        shape_dirs,
        joint_regressor,
        parents: PARENTS.to_vec(),
        skin_weights,
        extended_regressor: None,
    })
}
