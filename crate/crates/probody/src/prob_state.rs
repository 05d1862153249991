//! Gaussian body states and linear propagation of their uncertainty to 3D
//! points.
//!
//! The state distribution is diagonal in the 85 error coordinates — the
//! posture blocks of the empirical correlation over motion data are strongly
//! diagonally dominant, so cross terms are dropped throughout the state
//! pipeline (see [`crate::metrics::posture_correlation`] to reproduce that
//! analysis). Full 3×3 covariance appears only after propagation to point
//! space: per-point blocks of `J·Σ·Jᵀ` are materialized, never the dense
//! `(3N)×(3N)` matrix, which keeps full-mesh propagation inside the
//! real-time budget.

use nalgebra::{Matrix3, SVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::body_model::{BodyModel, ErrorCoords, HumanState, ERROR_DIM};
use crate::error::{Error, Result};

/// Gaussian over body states: a manifold mean and per-dimension error-state
/// variances (diagonal covariance on [`ErrorCoords`] layout).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBodyState {
    pub mean: HumanState,
    #[serde(with = "var_serde")]
    pub var: SVector<f64, ERROR_DIM>,
}

impl GaussianBodyState {
    pub fn new(mean: HumanState, var: SVector<f64, ERROR_DIM>) -> Result<Self> {
        let s = GaussianBodyState { mean, var };
        s.validate()?;
        Ok(s)
    }

    /// Uniform variance in every error dimension.
    pub fn isotropic(mean: HumanState, var: f64) -> Result<Self> {
        Self::new(mean, SVector::repeat(var))
    }

    pub fn validate(&self) -> Result<()> {
        self.mean.validate()?;
        if !self.var.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::Dimension(
                "variances must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.var.iter().all(|v| v.is_finite())
    }

    /// Draw `n` states: Gaussian in error coordinates, retracted onto the
    /// manifold. Deterministic in `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Vec<HumanState>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std: Vec<f64> = self.var.iter().map(|v| v.sqrt()).collect();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut e = ErrorCoords::zeros();
            for (i, s) in std.iter().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                e.0[i] = s * z;
            }
            out.push(self.mean.apply_error(&e)?);
        }
        Ok(out)
    }
}

mod var_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &SVector<f64, ERROR_DIM>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(ERROR_DIM))?;
        for x in v.iter() {
            seq.serialize_element(x)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<SVector<f64, ERROR_DIM>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() != ERROR_DIM {
            return Err(serde::de::Error::custom(format!(
                "variance vector must have length {}, got {}",
                ERROR_DIM,
                v.len()
            )));
        }
        Ok(SVector::from_column_slice(&v))
    }
}

/// Gaussian 3D point set: per-point mean and 3×3 covariance block.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloudGaussian {
    pub means: Vec<Vector3<f64>>,
    pub cov_blocks: Vec<Matrix3<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    mean: [f64; 3],
    /// Upper triangle: xx, xy, xz, yy, yz, zz.
    cov: [f64; 6],
}

impl Serialize for PointCloudGaussian {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.means.len()))?;
        for (m, c) in self.means.iter().zip(&self.cov_blocks) {
            seq.serialize_element(&PointRecord {
                mean: [m.x, m.y, m.z],
                cov: [c.m11, c.m12, c.m13, c.m22, c.m23, c.m33],
            })?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for PointCloudGaussian {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<PointRecord>::deserialize(d)?;
        let mut means = Vec::with_capacity(records.len());
        let mut cov_blocks = Vec::with_capacity(records.len());
        for r in records {
            means.push(Vector3::new(r.mean[0], r.mean[1], r.mean[2]));
            let [xx, xy, xz, yy, yz, zz] = r.cov;
            cov_blocks.push(Matrix3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz));
        }
        Ok(PointCloudGaussian { means, cov_blocks })
    }
}

impl PointCloudGaussian {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Propagate the state distribution to camera-frame mesh vertices.
pub fn propagate_vertices(model: &BodyModel, s: &GaussianBodyState) -> Result<PointCloudGaussian> {
    propagate_vertices_threaded(model, s, 1)
}

/// As [`propagate_vertices`], with the per-vertex work split over `threads`
/// OS threads. Outputs are written per vertex with no cross-vertex
/// reduction, so results are bit-identical for any thread count.
pub fn propagate_vertices_threaded(
    model: &BodyModel,
    s: &GaussianBodyState,
    threads: usize,
) -> Result<PointCloudGaussian> {
    s.validate()?;
    let ctx = model.jacobian_ctx(&s.mean)?;
    let n = model.n_vertices();
    let var = s.var.as_slice();
    let mut means = vec![Vector3::zeros(); n];
    let mut cov_blocks = vec![Matrix3::zeros(); n];

    let threads = threads.max(1).min(n.max(1));
    if threads == 1 {
        let mut cols = crate::body_model::JacCols::new();
        for v in 0..n {
            ctx.vertex_columns(v, &mut cols);
            means[v] = ctx.camera_vertex(v);
            cov_blocks[v] = cols.propagate_diag(var);
        }
    } else {
        let chunk = n.div_ceil(threads);
        let mean_chunks: Vec<&mut [Vector3<f64>]> = means.chunks_mut(chunk).collect();
        let cov_chunks: Vec<&mut [Matrix3<f64>]> = cov_blocks.chunks_mut(chunk).collect();
        std::thread::scope(|scope| {
            for (i, (ms, cs)) in mean_chunks.into_iter().zip(cov_chunks).enumerate() {
                let ctx = &ctx;
                scope.spawn(move || {
                    let mut cols = crate::body_model::JacCols::new();
                    let base = i * chunk;
                    for (o, (m, c)) in ms.iter_mut().zip(cs.iter_mut()).enumerate() {
                        let v = base + o;
                        ctx.vertex_columns(v, &mut cols);
                        *m = ctx.camera_vertex(v);
                        *c = cols.propagate_diag(var);
                    }
                });
            }
        });
    }
    Ok(PointCloudGaussian { means, cov_blocks })
}

/// Propagate the state distribution to the camera-frame joints.
pub fn propagate_joints(model: &BodyModel, s: &GaussianBodyState) -> Result<PointCloudGaussian> {
    s.validate()?;
    let ctx = model.jacobian_ctx(&s.mean)?;
    let var = s.var.as_slice();
    let k = model.n_joints();
    let mut means = Vec::with_capacity(k);
    let mut cov_blocks = Vec::with_capacity(k);
    let mut cols = crate::body_model::JacCols::new();
    for j in 0..k {
        ctx.joint_columns(j, &mut cols);
        means.push(ctx.camera_joint(j));
        cov_blocks.push(cols.propagate_diag(var));
    }
    Ok(PointCloudGaussian { means, cov_blocks })
}

/// Propagate to the extended landmark set, if the model carries one.
pub fn propagate_extended_joints(
    model: &BodyModel,
    s: &GaussianBodyState,
) -> Result<Option<PointCloudGaussian>> {
    s.validate()?;
    let ctx = model.jacobian_ctx(&s.mean)?;
    let rows = match ctx.extended_rows() {
        Some(rows) => rows.to_vec(),
        None => return Ok(None),
    };
    let var = s.var.as_slice();
    let mut means = Vec::with_capacity(rows.len());
    let mut cov_blocks = Vec::with_capacity(rows.len());
    let mut cols = crate::body_model::JacCols::new();
    let mut acc = crate::body_model::JacCols::new();
    for row in &rows {
        let mut mean = Vector3::zeros();
        for c in acc.cols.iter_mut() {
            *c = Vector3::zeros();
        }
        for (v, w) in row {
            let v = *v as usize;
            ctx.vertex_columns(v, &mut cols);
            mean += *w * ctx.camera_vertex(v);
            for (a, c) in acc.cols.iter_mut().zip(cols.cols.iter()) {
                *a += *w * c;
            }
        }
        means.push(mean);
        cov_blocks.push(acc.propagate_diag(var));
    }
    Ok(Some(PointCloudGaussian { means, cov_blocks }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{synth_model, ROOT_POS_OFFSET};
    use nalgebra::SVector;
    use rand_chacha::ChaCha8Rng;

    fn small_state(seed: u64) -> GaussianBodyState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = crate::body_model::tests::random_state(&mut rng, 0.8);
        GaussianBodyState::isotropic(mean, 1e-4).unwrap()
    }

    /// Empirical per-point covariance from samples pushed through `f`.
    fn monte_carlo_blocks<F>(
        s: &GaussianBodyState,
        n_points: usize,
        n_samples: usize,
        seed: u64,
        f: F,
    ) -> (Vec<Vector3<f64>>, Vec<Matrix3<f64>>)
    where
        F: Fn(&HumanState) -> Vec<Vector3<f64>>,
    {
        let samples = s.sample(seed, n_samples).unwrap();
        let mut mean = vec![Vector3::zeros(); n_points];
        let pts: Vec<Vec<Vector3<f64>>> = samples.iter().map(&f).collect();
        for p in &pts {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= n_samples as f64;
        }
        let mut cov = vec![Matrix3::zeros(); n_points];
        for p in &pts {
            for ((c, x), m) in cov.iter_mut().zip(p).zip(&mean) {
                let d = x - m;
                *c += d * d.transpose();
            }
        }
        for c in cov.iter_mut() {
            *c /= (n_samples - 1) as f64;
        }
        (mean, cov)
    }

    fn max_rel_frobenius(analytic: &[Matrix3<f64>], empirical: &[Matrix3<f64>]) -> f64 {
        analytic
            .iter()
            .zip(empirical)
            .map(|(a, e)| (a - e).norm() / a.norm().max(1e-30))
            .fold(0.0, f64::max)
    }

    #[test]
    fn near_zero_variance_gives_near_zero_blocks() {
        let model = synth_model(80, 2).unwrap();
        let mut s = small_state(1);
        s.var = SVector::repeat(1e-18);
        let cloud = propagate_vertices(&model, &s).unwrap();
        for b in &cloud.cov_blocks {
            assert!(b.norm() < 1e-14);
        }
    }

    #[test]
    fn root_position_noise_gives_isotropic_blocks() {
        let model = synth_model(80, 2).unwrap();
        let mut s = small_state(1);
        s.var = SVector::repeat(1e-30);
        let sigma2 = 0.01;
        for d in ROOT_POS_OFFSET..ROOT_POS_OFFSET + 3 {
            s.var[d] = sigma2;
        }
        let cloud = propagate_vertices(&model, &s).unwrap();
        for b in &cloud.cov_blocks {
            assert!((b - Matrix3::identity() * sigma2).norm() < 1e-12);
        }
        let joints = propagate_joints(&model, &s).unwrap();
        for b in &joints.cov_blocks {
            assert!((b - Matrix3::identity() * sigma2).norm() < 1e-12);
        }
    }

    #[test]
    fn root_joint_ignores_posture_noise_at_rest() {
        let model = synth_model(80, 2).unwrap();
        let mut s = GaussianBodyState::isotropic(HumanState::rest(), 1e-30).unwrap();
        for d in crate::body_model::POSTURE_OFFSET..ROOT_POS_OFFSET {
            s.var[d] = 1e-2;
        }
        let joints = propagate_joints(&model, &s).unwrap();
        assert!(joints.cov_blocks[0].norm() < 1e-18);
        // Leaf joints do move under posture noise.
        assert!(joints.cov_blocks[23].norm() > 1e-8);
    }

    #[test]
    fn vertex_blocks_match_monte_carlo() {
        let model = synth_model(40, 6).unwrap();
        let s = small_state(3); // σ = 0.01 per error dimension
        let cloud = propagate_vertices(&model, &s).unwrap();
        let (_, emp) = monte_carlo_blocks(&s, model.n_vertices(), 20_000, 99, |st| {
            model.to_camera(st).unwrap()
        });
        let err = max_rel_frobenius(&cloud.cov_blocks, &emp);
        assert!(err < 0.05, "max rel Frobenius error {err}");
    }

    #[test]
    fn joint_blocks_match_monte_carlo() {
        let model = synth_model(40, 6).unwrap();
        let s = small_state(4);
        let cloud = propagate_joints(&model, &s).unwrap();
        let (_, emp) = monte_carlo_blocks(&s, model.n_joints(), 20_000, 100, |st| {
            model.joints_in_camera(st).unwrap()
        });
        let err = max_rel_frobenius(&cloud.cov_blocks, &emp);
        assert!(err < 0.05, "max rel Frobenius error {err}");
    }

    #[test]
    fn linearization_error_shrinks_with_sigma() {
        let model = synth_model(30, 8).unwrap();
        let mut errs = Vec::new();
        for sigma in [0.001, 0.1] {
            let mut s = small_state(5);
            s.var = SVector::repeat(sigma * sigma);
            let cloud = propagate_vertices(&model, &s).unwrap();
            // Dense deterministic probe: compare propagated blocks against
            // second-order-free linear pushforward on a fixed sample set.
            let (_, emp) = monte_carlo_blocks(&s, model.n_vertices(), 40_000, 7, |st| {
                model.to_camera(st).unwrap()
            });
            errs.push(max_rel_frobenius(&cloud.cov_blocks, &emp));
        }
        assert!(
            errs[0] < errs[1],
            "linearization check: rel err at σ=0.001 ({}) should be below σ=0.1 ({})",
            errs[0],
            errs[1]
        );
    }

    #[test]
    fn blocks_are_symmetric_psd_and_linear_in_var() {
        let model = synth_model(60, 10).unwrap();
        let s = small_state(6);
        let cloud = propagate_vertices(&model, &s).unwrap();
        for b in &cloud.cov_blocks {
            assert!((b - b.transpose()).abs().max() < 1e-12);
            let eig = nalgebra::SymmetricEigen::new(*b);
            assert!(eig.eigenvalues.min() >= -1e-10);
        }
        let mut scaled = s.clone();
        let c = 3.5;
        scaled.var *= c;
        let scaled_cloud = propagate_vertices(&model, &scaled).unwrap();
        for (a, b) in cloud.cov_blocks.iter().zip(&scaled_cloud.cov_blocks) {
            assert!((a * c - b).abs().max() <= 1e-12 * b.abs().max().max(1e-30));
        }
    }

    #[test]
    fn threaded_propagation_is_bit_identical() {
        let model = synth_model(123, 11).unwrap();
        let s = small_state(7);
        let one = propagate_vertices_threaded(&model, &s, 1).unwrap();
        for t in [2, 3, 8] {
            let multi = propagate_vertices_threaded(&model, &s, t).unwrap();
            assert_eq!(one, multi);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_centered() {
        let s = small_state(8);
        let a = s.sample(42, 16).unwrap();
        let b = s.sample(42, 16).unwrap();
        assert_eq!(a, b);

        let mut tight = s.clone();
        tight.var = SVector::repeat(1e-30);
        for draw in tight.sample(1, 8).unwrap() {
            let e = tight.mean.error_to(&draw);
            assert!(e.0.norm() < 1e-12);
        }

        // Empirical mean of the error coordinates is zero within a CLT bound.
        let n = 20_000;
        let draws = s.sample(3, n).unwrap();
        let mut acc = ErrorCoords::zeros();
        for d in &draws {
            acc = acc + s.mean.error_to(d);
        }
        for i in 0..ERROR_DIM {
            let mean_i = acc.0[i] / n as f64;
            let bound = 4.0 * (s.var[i] / n as f64).sqrt();
            assert!(mean_i.abs() < bound, "dim {i}: {mean_i} vs bound {bound}");
        }
    }

    #[test]
    fn extended_joint_propagation_matches_direct_blend() {
        let model = synth_model(60, 12).unwrap();
        let mut data = model.data().clone();
        let n = data.template.len();
        let mut row = vec![0.0; n];
        row[0] = 0.5;
        row[1] = 0.5;
        data.extended_regressor = Some(vec![row]);
        let model = BodyModel::from_data(data).unwrap();
        let s = small_state(13);
        let ext = propagate_extended_joints(&model, &s).unwrap().unwrap();
        let verts = propagate_vertices(&model, &s).unwrap();
        assert!((ext.means[0] - 0.5 * (verts.means[0] + verts.means[1])).norm() < 1e-12);
        // The block is a full J·Σ·Jᵀ of the blended Jacobian, not a blend of
        // the per-vertex blocks; just confirm shape and PSD here.
        let eig = nalgebra::SymmetricEigen::new(ext.cov_blocks[0]);
        assert!(eig.eigenvalues.min() >= -1e-10);
    }

    #[test]
    fn point_cloud_serde_round_trip() {
        let model = synth_model(30, 14).unwrap();
        let s = small_state(9);
        let cloud = propagate_vertices(&model, &s).unwrap();
        let json = serde_json::to_string(&cloud).unwrap();
        let back: PointCloudGaussian = serde_json::from_str(&json).unwrap();
        assert_eq!(cloud, back);
    }

    #[test]
    fn gaussian_state_rejects_bad_variance() {
        let mean = HumanState::rest();
        assert!(GaussianBodyState::isotropic(mean.clone(), 0.0).is_err());
        assert!(GaussianBodyState::isotropic(mean, f64::NAN).is_err());
    }
}
