//! Parametric articulated body mesh.
//!
//! The model maps shape coefficients and posture quaternions to a mesh:
//! shape blendshapes offset a template, a regressor places the rest-pose
//! joints, and linear blend skinning poses the vertices along the kinematic
//! tree. Pose-dependent blendshapes are deliberately omitted — shape
//! blendshapes and skinning carry all the propagation machinery — and a
//! `pose_dirs` entry in a model file is ignored.
//!
//! All Jacobians are taken with respect to the 85 error coordinates of
//! [`ErrorCoords`](state::ErrorCoords), with `vec(·)` row-major over points
//! then xyz.

mod state;
mod synth;

pub use state::{
    ErrorCoords, HumanState, ERROR_DIM, NUM_JOINTS, NUM_POSTURE_JOINTS, POSTURE_OFFSET,
    ROOT_POS_OFFSET, ROOT_ROT_OFFSET, SHAPE_DIM,
};
pub use synth::synth_model;

use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::skew;

const ROW_SUM_TOL: f64 = 1e-9;
const MAX_SKIN_INFLUENCES: usize = 4;

/// On-disk model arrays. This struct is the JSON schema; [`BodyModel`]
/// validates it and precomputes the sparse forms used for evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyModelData {
    /// N×3 rest vertices, meters.
    pub template: Vec<[f64; 3]>,
    /// N×3×10 shape blendshapes, meters per shape unit.
    pub shape_dirs: Vec<[[f64; SHAPE_DIM]; 3]>,
    /// K×N joint regressor; rows sum to 1.
    pub joint_regressor: Vec<Vec<f64>>,
    /// Parent of each joint; -1 for the root.
    pub parents: Vec<i64>,
    /// N×K skinning weights; rows sum to 1, at most 4 nonzero.
    pub skin_weights: Vec<Vec<f64>>,
    /// Optional K'×N regressor for an extended landmark set, applied to the
    /// posed mesh.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extended_regressor: Option<Vec<Vec<f64>>>,
}

/// Joint and vertex positions from one forward pass, human frame.
pub type JointsAndVertices = (Vec<Vector3<f64>>, Vec<Vector3<f64>>);

/// Validated body model with precomputed sparse evaluation structures.
#[derive(Clone, Debug)]
pub struct BodyModel {
    data: BodyModelData,
    template: Vec<Vector3<f64>>,
    shape_dirs: Vec<[Vector3<f64>; SHAPE_DIM]>,
    regressor_rows: Vec<Vec<(u32, f64)>>,
    skin_rows: Vec<Vec<(u32, f64)>>,
    parents: Vec<Option<usize>>,
    /// Joints ordered parents-before-children.
    topo_order: Vec<usize>,
    /// Per joint: the joint itself followed by its ancestors, root excluded.
    chains: Vec<Vec<usize>>,
    extended_rows: Option<Vec<Vec<(u32, f64)>>>,
}

fn sparse_rows(dense: &[Vec<f64>]) -> Vec<Vec<(u32, f64)>> {
    dense
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect()
        })
        .collect()
}

fn check_rows(
    rows: &[Vec<f64>],
    expect_cols: usize,
    field: &'static str,
    max_nonzero: Option<usize>,
) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != expect_cols {
            return Err(Error::InvalidModel {
                field,
                reason: format!("row {} has {} entries, expected {}", i, row.len(), expect_cols),
            });
        }
        let sum: f64 = row.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidModel {
                field,
                reason: format!("row {i} sums to {sum}, expected 1"),
            });
        }
        if let Some(limit) = max_nonzero {
            let nz = row.iter().filter(|w| **w != 0.0).count();
            if nz > limit {
                return Err(Error::InvalidModel {
                    field,
                    reason: format!("row {i} has {nz} nonzero weights, limit {limit}"),
                });
            }
        }
    }
    Ok(())
}

impl BodyModel {
    pub fn from_data(data: BodyModelData) -> Result<Self> {
        let n = data.template.len();
        if n == 0 {
            return Err(Error::InvalidModel {
                field: "template",
                reason: "empty template".into(),
            });
        }
        if data
            .template
            .iter()
            .any(|v| v.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::InvalidModel {
                field: "template",
                reason: "non-finite vertex".into(),
            });
        }
        if data.shape_dirs.len() != n {
            return Err(Error::InvalidModel {
                field: "shape_dirs",
                reason: format!("{} rows for {} vertices", data.shape_dirs.len(), n),
            });
        }
        if data.parents.len() != NUM_JOINTS {
            return Err(Error::InvalidModel {
                field: "parents",
                reason: format!("{} joints, expected {}", data.parents.len(), NUM_JOINTS),
            });
        }
        if data.parents[0] != -1 {
            return Err(Error::InvalidModel {
                field: "parents",
                reason: "joint 0 must be the root (parent -1)".into(),
            });
        }
        let mut parents = Vec::with_capacity(NUM_JOINTS);
        parents.push(None);
        for (k, &p) in data.parents.iter().enumerate().skip(1) {
            if p < 0 || p as usize >= NUM_JOINTS || p as usize == k {
                return Err(Error::InvalidModel {
                    field: "parents",
                    reason: format!("joint {k} has invalid parent {p}"),
                });
            }
            parents.push(Some(p as usize));
        }
        // Topological order doubles as the cycle check: every joint must
        // reach the root.
        let mut topo_order = vec![0usize];
        let mut placed = [false; NUM_JOINTS];
        placed[0] = true;
        while topo_order.len() < NUM_JOINTS {
            let before = topo_order.len();
            for k in 1..NUM_JOINTS {
                if !placed[k] && placed[parents[k].unwrap()] {
                    placed[k] = true;
                    topo_order.push(k);
                }
            }
            if topo_order.len() == before {
                let stuck: Vec<usize> = (0..NUM_JOINTS).filter(|k| !placed[*k]).collect();
                return Err(Error::InvalidModel {
                    field: "parents",
                    reason: format!("cycle detected among joints {stuck:?}"),
                });
            }
        }
        if data.joint_regressor.len() != NUM_JOINTS {
            return Err(Error::InvalidModel {
                field: "joint_regressor",
                reason: format!("{} rows, expected {}", data.joint_regressor.len(), NUM_JOINTS),
            });
        }
        check_rows(&data.joint_regressor, n, "joint_regressor", None)?;
        if data.skin_weights.len() != n {
            return Err(Error::InvalidModel {
                field: "skin_weights",
                reason: format!("{} rows for {} vertices", data.skin_weights.len(), n),
            });
        }
        check_rows(
            &data.skin_weights,
            NUM_JOINTS,
            "skin_weights",
            Some(MAX_SKIN_INFLUENCES),
        )?;
        if let Some(ext) = &data.extended_regressor {
            check_rows(ext, n, "extended_regressor", None)?;
        }

        let template = data
            .template
            .iter()
            .map(|v| Vector3::new(v[0], v[1], v[2]))
            .collect();
        let shape_dirs = data
            .shape_dirs
            .iter()
            .map(|rows| {
                let mut cols = [Vector3::zeros(); SHAPE_DIM];
                for (i, col) in cols.iter_mut().enumerate() {
                    *col = Vector3::new(rows[0][i], rows[1][i], rows[2][i]);
                }
                cols
            })
            .collect();
        let mut chains = vec![Vec::new(); NUM_JOINTS];
        for (k, chain) in chains.iter_mut().enumerate() {
            let mut j = k;
            while j != 0 {
                chain.push(j);
                j = parents[j].unwrap();
            }
        }
        let regressor_rows = sparse_rows(&data.joint_regressor);
        let skin_rows = sparse_rows(&data.skin_weights);
        let extended_rows = data.extended_regressor.as_deref().map(sparse_rows);

        Ok(BodyModel {
            template,
            shape_dirs,
            regressor_rows,
            skin_rows,
            parents,
            topo_order,
            chains,
            extended_rows,
            data,
        })
    }

    pub fn data(&self) -> &BodyModelData {
        &self.data
    }

    pub fn n_vertices(&self) -> usize {
        self.template.len()
    }

    pub fn n_joints(&self) -> usize {
        NUM_JOINTS
    }

    pub fn n_extended_joints(&self) -> Option<usize> {
        self.extended_rows.as_ref().map(|r| r.len())
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    /// Pose the model: rest-pose joints and linear-blend-skinned vertices,
    /// both in the human (body) frame.
    pub fn forward(&self, state: &HumanState) -> Result<JointsAndVertices> {
        let body = self.pose(state)?;
        Ok((body.posed_joints, body.vertices))
    }

    /// Vertices in the camera frame: the root pose applied to the posed mesh.
    pub fn to_camera(&self, state: &HumanState) -> Result<Vec<Vector3<f64>>> {
        let body = self.pose(state)?;
        let root = state.root_pose();
        Ok(body.vertices.iter().map(|v| root.apply(v)).collect())
    }

    /// Joints in the camera frame.
    pub fn joints_in_camera(&self, state: &HumanState) -> Result<Vec<Vector3<f64>>> {
        let body = self.pose(state)?;
        let root = state.root_pose();
        Ok(body.posed_joints.iter().map(|p| root.apply(p)).collect())
    }

    /// Extended landmark set (if the model carries one), camera frame.
    pub fn extended_joints_in_camera(&self, state: &HumanState) -> Result<Option<Vec<Vector3<f64>>>> {
        let rows = match &self.extended_rows {
            Some(rows) => rows,
            None => return Ok(None),
        };
        let verts = self.to_camera(state)?;
        Ok(Some(
            rows.iter()
                .map(|row| {
                    row.iter()
                        .fold(Vector3::zeros(), |acc, (v, w)| acc + *w * verts[*v as usize])
                })
                .collect(),
        ))
    }

    pub(crate) fn pose(&self, state: &HumanState) -> Result<PosedBody> {
        state.validate()?;
        let n = self.n_vertices();
        let mut shaped = Vec::with_capacity(n);
        for v in 0..n {
            let mut p = self.template[v];
            for (i, dir) in self.shape_dirs[v].iter().enumerate() {
                p += state.beta[i] * dir;
            }
            shaped.push(p);
        }
        let rest_joints: Vec<Vector3<f64>> = self
            .regressor_rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(Vector3::zeros(), |acc, (v, w)| acc + *w * shaped[*v as usize])
            })
            .collect();

        // Deviation-form kinematics: track `posed − rest` so identity posture
        // reproduces the rest pose exactly instead of up to rounding.
        let mut world_rot = vec![Matrix3::identity(); NUM_JOINTS];
        let mut posed_dev = vec![Vector3::zeros(); NUM_JOINTS];
        for &k in self.topo_order.iter().skip(1) {
            let p = self.parents[k].unwrap();
            let local = state.theta[k - 1].rotation_matrix();
            world_rot[k] = world_rot[p] * local;
            posed_dev[k] = posed_dev[p]
                + (world_rot[p] - Matrix3::identity()) * (rest_joints[k] - rest_joints[p]);
        }
        let rot_dev: Vec<Matrix3<f64>> = world_rot
            .iter()
            .map(|r| r - Matrix3::identity())
            .collect();
        let posed_joints: Vec<Vector3<f64>> = rest_joints
            .iter()
            .zip(&posed_dev)
            .map(|(j, d)| j + d)
            .collect();

        let vertices = blend(&shaped, &rest_joints, &rot_dev, &posed_dev, &self.skin_rows);

        Ok(PosedBody {
            shaped,
            rest_joints,
            world_rot,
            posed_joints,
            vertices,
        })
    }

    /// Jacobian of the vectorized camera-frame vertices w.r.t. the error
    /// coordinates, `(3N)×85`.
    pub fn vertex_jacobian(&self, state: &HumanState) -> Result<DMatrix<f64>> {
        let ctx = self.jacobian_ctx(state)?;
        let n = self.n_vertices();
        let mut j = DMatrix::zeros(3 * n, ERROR_DIM);
        let mut cols = JacCols::new();
        for v in 0..n {
            ctx.vertex_columns(v, &mut cols);
            cols.write_rows(&mut j, 3 * v);
        }
        Ok(j)
    }

    /// Jacobian of the vectorized camera-frame joints w.r.t. the error
    /// coordinates, `(3K)×85`.
    pub fn joint_jacobian(&self, state: &HumanState) -> Result<DMatrix<f64>> {
        let ctx = self.jacobian_ctx(state)?;
        let mut j = DMatrix::zeros(3 * NUM_JOINTS, ERROR_DIM);
        let mut cols = JacCols::new();
        for k in 0..NUM_JOINTS {
            ctx.joint_columns(k, &mut cols);
            cols.write_rows(&mut j, 3 * k);
        }
        Ok(j)
    }

    pub(crate) fn jacobian_ctx(&self, state: &HumanState) -> Result<JacobianCtx<'_>> {
        let body = self.pose(state)?;
        let root_rot = state.q.rotation_matrix();
        let root_pos = state.r;

        // d(rest joint)/dβ from the regressor over blendshape columns.
        let mut rest_grad = vec![[Vector3::zeros(); SHAPE_DIM]; NUM_JOINTS];
        for (k, row) in self.regressor_rows.iter().enumerate() {
            for (v, w) in row {
                let dirs = &self.shape_dirs[*v as usize];
                for i in 0..SHAPE_DIM {
                    rest_grad[k][i] += *w * dirs[i];
                }
            }
        }
        // d(posed joint)/dβ: rotations are β-independent, so the offsets
        // recurse down the tree.
        let mut posed_grad = vec![[Vector3::zeros(); SHAPE_DIM]; NUM_JOINTS];
        posed_grad[0] = rest_grad[0];
        for &k in self.topo_order.iter().skip(1) {
            let p = self.parents[k].unwrap();
            for i in 0..SHAPE_DIM {
                posed_grad[k][i] =
                    posed_grad[p][i] + body.world_rot[p] * (rest_grad[k][i] - rest_grad[p][i]);
            }
        }
        let parent_rot: Vec<Matrix3<f64>> = (0..NUM_JOINTS)
            .map(|k| match self.parents[k] {
                Some(p) => body.world_rot[p],
                None => Matrix3::identity(),
            })
            .collect();

        Ok(JacobianCtx {
            model: self,
            body,
            root_rot,
            root_pos,
            rest_grad,
            posed_grad,
            parent_rot,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(&self.data)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Write the compact binary container: magic + version header, then the
    /// model arrays in schema order, floats little-endian IEEE-754.
    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let d = &self.data;
        let n = d.template.len();
        let n_ext = d.extended_regressor.as_ref().map_or(0, |e| e.len());
        let mut buf = Vec::with_capacity(16 + 8 * n * (3 + 30 + NUM_JOINTS));
        buf.extend_from_slice(BINARY_MAGIC);
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(n as u64).to_le_bytes());
        buf.extend_from_slice(&(n_ext as u64).to_le_bytes());
        for x in d.template.iter().flatten() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for x in d.shape_dirs.iter().flatten().flatten() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for x in d.joint_regressor.iter().flatten() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for p in &d.parents {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        for x in d.skin_weights.iter().flatten() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        if let Some(ext) = &d.extended_regressor {
            for x in ext.iter().flatten() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        std::fs::write(path, buf)?;
        Ok(())
    }
}

const BINARY_MAGIC: &[u8; 8] = b"PBODYMDL";

fn load_binary(bytes: &[u8]) -> Result<BodyModel> {
    let fail = |reason: &str| Error::InvalidModel {
        field: "binary",
        reason: reason.to_string(),
    };
    struct Cursor<'a> {
        bytes: &'a [u8],
        at: usize,
    }
    impl<'a> Cursor<'a> {
        fn take(&mut self, len: usize) -> Result<&'a [u8]> {
            let end = self.at.checked_add(len).ok_or_else(|| Error::InvalidModel {
                field: "binary",
                reason: "length overflow".into(),
            })?;
            let s = self.bytes.get(self.at..end).ok_or_else(|| Error::InvalidModel {
                field: "binary",
                reason: "truncated file".into(),
            })?;
            self.at = end;
            Ok(s)
        }
        fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
            Ok(self
                .take(8 * count)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        }
    }
    let mut cur = Cursor {
        bytes,
        at: BINARY_MAGIC.len(),
    };
    let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    if version != 1 {
        return Err(fail(&format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(cur.take(8)?.try_into().unwrap()) as usize;
    let n_ext = u64::from_le_bytes(cur.take(8)?.try_into().unwrap()) as usize;
    if n == 0 || n > 10_000_000 {
        return Err(fail(&format!("implausible vertex count {n}")));
    }
    let template: Vec<[f64; 3]> = cur
        .f64s(3 * n)?
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    let shape_dirs: Vec<[[f64; SHAPE_DIM]; 3]> = cur
        .f64s(3 * SHAPE_DIM * n)?
        .chunks_exact(3 * SHAPE_DIM)
        .map(|c| {
            let mut rows = [[0.0; SHAPE_DIM]; 3];
            for (axis, row) in rows.iter_mut().enumerate() {
                row.copy_from_slice(&c[axis * SHAPE_DIM..(axis + 1) * SHAPE_DIM]);
            }
            rows
        })
        .collect();
    let joint_regressor: Vec<Vec<f64>> = cur
        .f64s(NUM_JOINTS * n)?
        .chunks_exact(n)
        .map(|c| c.to_vec())
        .collect();
    let parents: Vec<i64> = cur
        .take(8 * NUM_JOINTS)?
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let skin_weights: Vec<Vec<f64>> = cur
        .f64s(NUM_JOINTS * n)?
        .chunks_exact(NUM_JOINTS)
        .map(|c| c.to_vec())
        .collect();
    let extended_regressor = if n_ext > 0 {
        Some(
            cur.f64s(n_ext * n)?
                .chunks_exact(n)
                .map(|c| c.to_vec())
                .collect(),
        )
    } else {
        None
    };
    if cur.at != bytes.len() {
        return Err(fail("trailing bytes"));
    }
    BodyModel::from_data(BodyModelData {
        template,
        shape_dirs,
        joint_regressor,
        parents,
        skin_weights,
        extended_regressor,
    })
}

/// Load and validate a body model: the JSON schema, or the binary container
/// when the file carries its magic header.
pub fn load_model(path: &Path) -> Result<BodyModel> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        return load_binary(&bytes);
    }
    let raw = std::str::from_utf8(&bytes)
        .map_err(|_| Error::InvalidModel {
            field: "file",
            reason: "neither JSON nor the binary container".into(),
        })?;
    let data: BodyModelData = serde_json::from_str(raw)?;
    BodyModel::from_data(data)
}

/// Linear blend skinning in deviation form: a vertex with weights summing to
/// one moves by exactly the blended deviation, so equal per-joint transforms
/// move every vertex by exactly that transform.
pub(crate) fn blend(
    shaped: &[Vector3<f64>],
    rest_joints: &[Vector3<f64>],
    rot_dev: &[Matrix3<f64>],
    posed_dev: &[Vector3<f64>],
    skin_rows: &[Vec<(u32, f64)>],
) -> Vec<Vector3<f64>> {
    shaped
        .iter()
        .zip(skin_rows)
        .map(|(s, row)| {
            let mut out = *s;
            for (k, w) in row {
                let k = *k as usize;
                out += *w * (rot_dev[k] * (s - rest_joints[k]) + posed_dev[k]);
            }
            out
        })
        .collect()
}

/// Forward-kinematics result in the human frame, plus the per-joint frames
/// the Jacobians need.
pub(crate) struct PosedBody {
    pub shaped: Vec<Vector3<f64>>,
    pub rest_joints: Vec<Vector3<f64>>,
    pub world_rot: Vec<Matrix3<f64>>,
    pub posed_joints: Vec<Vector3<f64>>,
    pub vertices: Vec<Vector3<f64>>,
}

/// One point's Jacobian, stored as 85 column vectors.
pub(crate) struct JacCols {
    pub cols: [Vector3<f64>; ERROR_DIM],
}

impl JacCols {
    pub fn new() -> Self {
        JacCols {
            cols: [Vector3::zeros(); ERROR_DIM],
        }
    }

    fn clear(&mut self) {
        for c in self.cols.iter_mut() {
            *c = Vector3::zeros();
        }
    }

    fn write_rows(&self, m: &mut DMatrix<f64>, row: usize) {
        for (i, c) in self.cols.iter().enumerate() {
            m[(row, i)] = c.x;
            m[(row + 1, i)] = c.y;
            m[(row + 2, i)] = c.z;
        }
    }

    /// `J·diag(var)·Jᵀ` for this point: the propagated 3×3 covariance block.
    pub fn propagate_diag(&self, var: &[f64]) -> Matrix3<f64> {
        let mut b = Matrix3::zeros();
        for (c, v) in self.cols.iter().zip(var) {
            b.m11 += v * c.x * c.x;
            b.m12 += v * c.x * c.y;
            b.m13 += v * c.x * c.z;
            b.m22 += v * c.y * c.y;
            b.m23 += v * c.y * c.z;
            b.m33 += v * c.z * c.z;
        }
        b.m21 = b.m12;
        b.m31 = b.m13;
        b.m32 = b.m23;
        b
    }
}

pub(crate) struct JacobianCtx<'a> {
    model: &'a BodyModel,
    pub body: PosedBody,
    root_rot: Matrix3<f64>,
    root_pos: Vector3<f64>,
    rest_grad: Vec<[Vector3<f64>; SHAPE_DIM]>,
    posed_grad: Vec<[Vector3<f64>; SHAPE_DIM]>,
    parent_rot: Vec<Matrix3<f64>>,
}

impl JacobianCtx<'_> {
    pub fn camera_vertex(&self, v: usize) -> Vector3<f64> {
        self.root_rot * self.body.vertices[v] + self.root_pos
    }

    pub fn camera_joint(&self, k: usize) -> Vector3<f64> {
        self.root_rot * self.body.posed_joints[k] + self.root_pos
    }

    /// Fill `out` with the camera-frame Jacobian columns of vertex `v`.
    pub fn vertex_columns(&self, v: usize, out: &mut JacCols) {
        out.clear();
        let body = &self.body;
        let skin = &self.model.skin_rows[v];

        for i in 0..SHAPE_DIM {
            let mut acc = Vector3::zeros();
            for (k, w) in skin {
                let k = *k as usize;
                acc += *w
                    * (body.world_rot[k] * (self.model.shape_dirs[v][i] - self.rest_grad[k][i])
                        + self.posed_grad[k][i]);
            }
            out.cols[i] = self.root_rot * acc;
        }

        // Posture: each ancestor joint j rotates the skinned contributions of
        // its subtree about the posed joint j.
        let mut acc_p = [Vector3::zeros(); NUM_JOINTS];
        let mut acc_s = [0.0f64; NUM_JOINTS];
        let mut touched = [false; NUM_JOINTS];
        for (k, w) in skin {
            let k = *k as usize;
            let contrib =
                body.world_rot[k] * (body.shaped[v] - body.rest_joints[k]) + body.posed_joints[k];
            for &j in &self.model.chains[k] {
                acc_p[j] += *w * contrib;
                acc_s[j] += *w;
                touched[j] = true;
            }
        }
        for j in 1..NUM_JOINTS {
            if !touched[j] {
                continue;
            }
            let lever = acc_p[j] - acc_s[j] * body.posed_joints[j];
            let block = self.root_rot * (skew(&lever) * self.parent_rot[j]) * -2.0;
            let o = POSTURE_OFFSET + 3 * (j - 1);
            out.cols[o] = block.column(0).into();
            out.cols[o + 1] = block.column(1).into();
            out.cols[o + 2] = block.column(2).into();
        }

        self.root_columns(self.root_rot * body.vertices[v], out);
    }

    /// Fill `out` with the camera-frame Jacobian columns of joint `k`.
    pub fn joint_columns(&self, k: usize, out: &mut JacCols) {
        out.clear();
        let body = &self.body;
        for i in 0..SHAPE_DIM {
            out.cols[i] = self.root_rot * self.posed_grad[k][i];
        }
        // A joint moves only under its strict ancestors' rotations.
        for &j in &self.model.chains[k] {
            if j == k {
                continue;
            }
            let lever = body.posed_joints[k] - body.posed_joints[j];
            let block = self.root_rot * (skew(&lever) * self.parent_rot[j]) * -2.0;
            let o = POSTURE_OFFSET + 3 * (j - 1);
            out.cols[o] = block.column(0).into();
            out.cols[o + 1] = block.column(1).into();
            out.cols[o + 2] = block.column(2).into();
        }
        self.root_columns(self.root_rot * body.posed_joints[k], out);
    }

    /// Root-pose columns shared by every point: translation is additive and
    /// a root rotation error rotates the rotated point.
    fn root_columns(&self, rotated: Vector3<f64>, out: &mut JacCols) {
        out.cols[ROOT_POS_OFFSET] = Vector3::x();
        out.cols[ROOT_POS_OFFSET + 1] = Vector3::y();
        out.cols[ROOT_POS_OFFSET + 2] = Vector3::z();
        let m = skew(&rotated) * -2.0;
        out.cols[ROOT_ROT_OFFSET] = m.column(0).into();
        out.cols[ROOT_ROT_OFFSET + 1] = m.column(1).into();
        out.cols[ROOT_ROT_OFFSET + 2] = m.column(2).into();
    }

    pub fn extended_rows(&self) -> Option<&[Vec<(u32, f64)>]> {
        self.model.extended_rows.as_deref()
    }
}
