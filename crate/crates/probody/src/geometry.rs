//! Quaternion and rigid-transform algebra on minimal error-state coordinates.
//!
//! Rotations are unit quaternions stored imaginary-first, `[a_x, a_y, a_z, b]`
//! with Hamilton multiplication. The rotation error between an estimate `q`
//! and a measurement `q̃` is the imaginary part of the error quaternion
//! `δq = q̃ ⊗ q⁻¹` (sign-canonicalized so the real part is non-negative), so
//! every rotation contributes three error coordinates and covariances over
//! rotations are 3×3. For a small rotation of angle θ about axis n the error
//! is `n·sin(θ/2) ≈ n·θ/2`; the factor two shows up in every Jacobian here.
//!
//! Rigid transforms perturb as `(r + δr, δq(e) ⊗ q)` and their compose
//! Jacobians are 6×6 blocks on `(position, rotation-error)` coordinates.

use nalgebra::{Matrix3, Matrix4, Matrix6, Quaternion, UnitQuaternion, Vector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Unit quaternion, stored imaginary-first: `[a_x, a_y, a_z, b]`.
///
/// Constructors normalize, so a `Quat` is always unit to machine precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat(UnitQuaternion<f64>);

impl Quat {
    pub fn identity() -> Self {
        Quat(UnitQuaternion::identity())
    }

    /// Build from imaginary part `a` and real part `b`; the result is
    /// normalized.
    pub fn from_parts(a: Vector3<f64>, b: f64) -> Self {
        Quat(UnitQuaternion::new_normalize(Quaternion::from_parts(b, a)))
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Quat::identity();
        }
        Quat(UnitQuaternion::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            angle,
        ))
    }

    /// Build from a rotation matrix (assumed orthonormal).
    pub fn from_rotation_matrix(m: &Matrix3<f64>) -> Self {
        Quat(UnitQuaternion::from_rotation_matrix(
            &nalgebra::Rotation3::from_matrix_unchecked(*m),
        ))
    }

    /// Imaginary part `a`.
    pub fn imag(&self) -> Vector3<f64> {
        self.0.as_ref().imag()
    }

    /// Real part `b`.
    pub fn real(&self) -> f64 {
        self.0.as_ref().w
    }

    /// Same rotation with the real part forced non-negative. The two
    /// antipodal representations encode one rotation; comparisons and error
    /// states use this canonical sign.
    pub fn canonicalized(&self) -> Self {
        if self.real() < 0.0 {
            Quat(UnitQuaternion::new_unchecked(-self.0.into_inner()))
        } else {
            *self
        }
    }

    pub fn inverse(&self) -> Self {
        Quat(self.0.inverse())
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    /// Fractional rotation: same axis, `t`-scaled angle.
    pub fn powf(&self, t: f64) -> Self {
        Quat(self.0.powf(t))
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        self.0.angle()
    }
}

impl Serialize for Quat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let a = self.imag();
        [a.x, a.y, a.z, self.real()].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Quat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 4]>::deserialize(deserializer)?;
        let norm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
        if !norm2.is_finite() || norm2 < 1e-12 {
            return Err(D::Error::custom(format!(
                "quaternion [{}, {}, {}, {}] is not normalizable",
                v[0], v[1], v[2], v[3]
            )));
        }
        // Already-unit values pass through bit-exactly so serialization
        // round-trips; anything else is normalized.
        if (norm2 - 1.0).abs() < 1e-12 {
            Ok(Quat(UnitQuaternion::new_unchecked(Quaternion::from_parts(
                v[3],
                Vector3::new(v[0], v[1], v[2]),
            ))))
        } else {
            Ok(Quat::from_parts(Vector3::new(v[0], v[1], v[2]), v[3]))
        }
    }
}

/// Tangent-space rotation error: the imaginary part of the error quaternion,
/// so `‖e‖ ≤ 1` always holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationError(pub Vector3<f64>);

impl RotationError {
    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }
}

/// Hamilton product `p ⊗ q`; composes rotations so that
/// `rotation(p ⊗ q) = rotation(p) ∘ rotation(q)`.
///
/// The product is renormalized: inverses are conjugates and rotation of a
/// point scales by the squared norm, so in feedback chains (predict from
/// your own last output) a norm drift of 1 ulp would otherwise compound
/// geometrically.
pub fn quat_mul(p: &Quat, q: &Quat) -> Quat {
    Quat(UnitQuaternion::new_normalize(
        p.0.into_inner() * q.0.into_inner(),
    ))
}

/// Rotation error of measurement `q_meas` relative to estimate `q_est`:
/// imaginary part of `q_meas ⊗ q_est⁻¹` after sign canonicalization.
/// Identical rotations give an exact zero.
pub fn quat_error(q_est: &Quat, q_meas: &Quat) -> RotationError {
    let a = q_est.canonicalized();
    let b = q_meas.canonicalized();
    if a == b {
        return RotationError(Vector3::zeros());
    }
    let delta = quat_mul(&b, &a.inverse()).canonicalized();
    RotationError(delta.imag())
}

/// Map an error vector back onto the manifold at base `q`:
/// `retract(q, e) = [e, √(1 − ‖e‖²)] ⊗ q`, the inverse of [`quat_error`].
/// A zero error returns the base unchanged.
pub fn retract(q: &Quat, e: &Vector3<f64>) -> Result<Quat> {
    let n2 = e.norm_squared();
    if n2 >= 1.0 {
        return Err(Error::ErrorOutOfDomain { norm: n2.sqrt() });
    }
    if n2 == 0.0 {
        return Ok(*q);
    }
    let delta = Quat::from_parts(*e, (1.0 - n2).sqrt());
    Ok(quat_mul(&delta, q))
}

/// Skew-symmetric matrix `[v]×` with `[v]× u = v × u`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rigid transform: position and orientation of frame B expressed in frame A
/// for a transform `T_AB`, mapping B-frame points into A.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub r: Vector3<f64>,
    pub q: Quat,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            r: Vector3::zeros(),
            q: Quat::identity(),
        }
    }

    pub fn new(r: Vector3<f64>, q: Quat) -> Self {
        RigidTransform { r, q }
    }

    /// `T_AC = T_AB ∘ T_BC`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            r: self.r + self.q.rotate(&other.r),
            q: quat_mul(&self.q, &other.q),
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let q_inv = self.q.inverse();
        RigidTransform {
            r: -q_inv.rotate(&self.r),
            q: q_inv,
        }
    }

    /// Apply to a point: `R(q)·p + r`.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.q.rotate(p) + self.r
    }

    /// 4×4 homogeneous matrix.
    pub fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.q.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.r);
        m
    }

    /// Error coordinates of `other` relative to `self`:
    /// `(other.r − self.r, quat_error(self.q, other.q))`.
    pub fn error_to(&self, other: &RigidTransform) -> nalgebra::Vector6<f64> {
        let dr = other.r - self.r;
        let e = quat_error(&self.q, &other.q).vector();
        nalgebra::Vector6::new(dr.x, dr.y, dr.z, e.x, e.y, e.z)
    }

    /// Perturb by 6 error coordinates `(δr, e)`.
    pub fn perturb(&self, d: &nalgebra::Vector6<f64>) -> Result<RigidTransform> {
        let dr = Vector3::new(d[0], d[1], d[2]);
        let e = Vector3::new(d[3], d[4], d[5]);
        Ok(RigidTransform {
            r: self.r + dr,
            q: retract(&self.q, &e)?,
        })
    }
}

/// Jacobians of `compose(T_AB, T_BC)` with respect to each operand, as 6×6
/// blocks on `(position, rotation-error)` coordinates, evaluated at zero
/// perturbation.
pub fn transform_jacobians(t_ab: &RigidTransform, t_bc: &RigidTransform) -> (Matrix6<f64>, Matrix6<f64>) {
    let r_ab = t_ab.q.rotation_matrix();
    let lever = r_ab * t_bc.r;

    let mut j_left = Matrix6::identity();
    // d(r_AB + R_AB(e)·r_BC)/de = −2·[R_AB·r_BC]×
    j_left
        .fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-2.0 * skew(&lever)));

    let mut j_right = Matrix6::zeros();
    j_right.fixed_view_mut::<3, 3>(0, 0).copy_from(&r_ab);
    j_right.fixed_view_mut::<3, 3>(3, 3).copy_from(&r_ab);

    (j_left, j_right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_quat(rng: &mut impl Rng) -> Quat {
        Quat::from_parts(
            Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
            rng.gen::<f64>() - 0.5,
        )
    }

    fn random_transform(rng: &mut impl Rng) -> RigidTransform {
        RigidTransform::new(
            Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 2.0,
            random_quat(rng),
        )
    }

    #[test]
    fn quat_mul_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_quat(&mut rng);
        let p = quat_mul(&Quat::identity(), &q);
        assert_abs_diff_eq!((p.imag() - q.imag()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.real(), q.real(), epsilon = 1e-15);
    }

    #[test]
    fn quat_mul_same_axis_angles_add() {
        let z = Vector3::z();
        let a = Quat::from_axis_angle(z, std::f64::consts::FRAC_PI_2);
        let b = quat_mul(&a, &a);
        let full = Quat::from_axis_angle(z, std::f64::consts::PI);
        assert_abs_diff_eq!((b.imag() - full.imag()).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.real(), full.real(), epsilon = 1e-12);
    }

    #[test]
    fn quat_mul_matches_rotation_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let p = random_quat(&mut rng);
            let q = random_quat(&mut rng);
            let direct = quat_mul(&p, &q).rotation_matrix();
            let via_matrices = p.rotation_matrix() * q.rotation_matrix();
            let diff = (direct - via_matrices).abs().max();
            assert!(diff < 1e-12, "max abs diff {diff}");
        }
    }

    #[test]
    fn quat_error_of_self_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_quat(&mut rng);
        assert_abs_diff_eq!(quat_error(&q, &q).vector().norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn quat_error_small_angle_is_half_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = random_quat(&mut rng);
        let theta = 0.002;
        let meas = quat_mul(&Quat::from_axis_angle(Vector3::x(), theta), &q);
        let e = quat_error(&q, &meas).vector();
        assert_abs_diff_eq!(e.x, (theta / 2.0).sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(e.x, 0.001, epsilon = 1e-9);
        assert_abs_diff_eq!(e.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn retract_zero_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_quat(&mut rng);
        let r = retract(&q, &Vector3::zeros()).unwrap();
        assert_eq!(r, q);
    }

    #[test]
    fn retract_from_identity_completes_norm() {
        let r = retract(&Quat::identity(), &Vector3::new(0.1, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(r.imag().x, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.real(), (1.0f64 - 0.01).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn retract_rejects_out_of_domain() {
        let e = Vector3::new(0.8, 0.6, 0.1);
        assert!(matches!(
            retract(&Quat::identity(), &e),
            Err(Error::ErrorOutOfDomain { .. })
        ));
    }

    #[test]
    fn error_retract_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let q = random_quat(&mut rng);
            let meas = random_quat(&mut rng);
            let e = quat_error(&q, &meas).vector();
            let rec = retract(&q, &e).unwrap().canonicalized();
            let m = meas.canonicalized();
            assert!((rec.imag() - m.imag()).norm() < 1e-9);
            assert!((rec.real() - m.real()).abs() < 1e-9);
        }
    }

    #[test]
    fn compose_with_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_transform(&mut rng);
        let c = t.compose(&RigidTransform::identity());
        assert_abs_diff_eq!((c.r - t.r).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(quat_error(&t.q, &c.q).vector().norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_is_involution_and_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let t = random_transform(&mut rng);
            let back = t.inverse().inverse();
            assert!((back.r - t.r).norm() < 1e-12);
            assert!(quat_error(&t.q, &back.q).vector().norm() < 1e-12);

            let id = t.compose(&t.inverse());
            assert!(id.r.norm() < 1e-9);
            assert!(quat_error(&Quat::identity(), &id.q).vector().norm() < 1e-9);
        }
    }

    #[test]
    fn compose_associativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let c = random_transform(&mut rng);
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert!((left.r - right.r).norm() < 1e-10);
            assert!(quat_error(&left.q, &right.q).vector().norm() < 1e-10);
        }
    }

    #[test]
    fn apply_distributes_over_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let p = Vector3::new(rng.gen(), rng.gen(), rng.gen());
            let lhs = a.compose(&b).apply(&p);
            let rhs = a.apply(&b.apply(&p));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn quat_mul_closure_and_associativity_bulk() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = random_quat(&mut rng);
            let q = random_quat(&mut rng);
            let r = random_quat(&mut rng);
            let pq = quat_mul(&p, &q);
            let norm = (pq.imag().norm_squared() + pq.real() * pq.real()).sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            let lhs = quat_mul(&pq, &r);
            let rhs = quat_mul(&p, &quat_mul(&q, &r));
            assert!(quat_error(&lhs, &rhs).vector().norm() < 1e-12);
        }
    }

    /// Central finite differences of `compose` in error coordinates.
    fn compose_jacobian_fd(
        t_ab: &RigidTransform,
        t_bc: &RigidTransform,
        wrt_first: bool,
        step: f64,
    ) -> Matrix6<f64> {
        let nominal = t_ab.compose(t_bc);
        let mut j = Matrix6::zeros();
        for k in 0..6 {
            let mut dp = nalgebra::Vector6::zeros();
            dp[k] = step;
            let mut dm = nalgebra::Vector6::zeros();
            dm[k] = -step;
            let (tp, tm) = if wrt_first {
                (t_ab.perturb(&dp).unwrap().compose(t_bc), t_ab.perturb(&dm).unwrap().compose(t_bc))
            } else {
                (t_ab.compose(&t_bc.perturb(&dp).unwrap()), t_ab.compose(&t_bc.perturb(&dm).unwrap()))
            };
            let col = (nominal.error_to(&tp) - nominal.error_to(&tm)) / (2.0 * step);
            j.set_column(k, &col);
        }
        j
    }

    #[test]
    fn transform_jacobian_left_block_identity_for_identity_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = random_transform(&mut rng);
        let (j_left, _) = transform_jacobians(&t, &RigidTransform::identity());
        assert!((j_left - Matrix6::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn transform_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let (j_left, j_right) = transform_jacobians(&a, &b);
            let fd_left = compose_jacobian_fd(&a, &b, true, 1e-6);
            let fd_right = compose_jacobian_fd(&a, &b, false, 1e-6);
            let scale = fd_left.abs().max().max(1.0);
            assert!((j_left - fd_left).abs().max() / scale < 1e-5);
            let scale = fd_right.abs().max().max(1.0);
            assert!((j_right - fd_right).abs().max() / scale < 1e-5);
        }
    }

    #[test]
    fn two_hop_jacobian_is_product_of_one_hop() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let a = random_transform(&mut rng);
            let b = random_transform(&mut rng);
            let c = random_transform(&mut rng);
            // d((A∘B)∘C)/dC directly, vs chaining through A∘B.
            let ab = a.compose(&b);
            let (_, j_direct) = transform_jacobians(&ab, &c);
            let (_, j_bc) = transform_jacobians(&b, &c);
            let (_, j_a_bc) = transform_jacobians(&a, &b.compose(&c));
            let chained = j_a_bc * j_bc;
            assert!((j_direct - chained).abs().max() < 1e-8);

            // d((A∘B)∘C)/dA: perturbation of A carries straight through.
            let (j_outer_left, _) = transform_jacobians(&ab, &c);
            let (j_ab_left, _) = transform_jacobians(&a, &b);
            let (j_direct_left, _) = transform_jacobians(&a, &b.compose(&c));
            let chained = j_outer_left * j_ab_left;
            assert!((chained - j_direct_left).abs().max() < 1e-8);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_quat() -> impl Strategy<Value = Quat> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_filter_map(
                "normalizable",
                |(x, y, z, w)| {
                    let n2 = x * x + y * y + z * z + w * w;
                    (n2 > 1e-3).then(|| Quat::from_parts(Vector3::new(x, y, z), w))
                },
            )
        }

        /// Error vectors with ‖e‖ < 0.5.
        fn arb_error() -> impl Strategy<Value = Vector3<f64>> {
            (-0.28..0.28f64, -0.28..0.28f64, -0.28..0.28f64)
                .prop_map(|(x, y, z)| Vector3::new(x, y, z))
        }

        proptest! {
            #[test]
            fn retraction_inverts_error_map(q in arb_quat(), e in arb_error()) {
                let rec = quat_error(&q, &retract(&q, &e).unwrap()).vector();
                prop_assert!((rec - e).norm() < 1e-9);
            }

            #[test]
            fn product_is_unit_and_associative(
                p in arb_quat(), q in arb_quat(), r in arb_quat()
            ) {
                let pq = quat_mul(&p, &q);
                let norm = (pq.imag().norm_squared() + pq.real() * pq.real()).sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-9);
                let lhs = quat_mul(&pq, &r);
                let rhs = quat_mul(&p, &quat_mul(&q, &r));
                prop_assert!(quat_error(&lhs, &rhs).vector().norm() < 1e-12);
            }

            #[test]
            fn rotation_preserves_norm(q in arb_quat(), x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64) {
                let v = Vector3::new(x, y, z);
                prop_assert!((q.rotate(&v).norm() - v.norm()).abs() < 1e-9 * v.norm().max(1.0));
            }
        }
    }

    #[test]
    fn quat_serde_is_imaginary_first() {
        let q = Quat::from_axis_angle(Vector3::z(), 0.3);
        let s = serde_json::to_string(&q).unwrap();
        let v: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(v.len(), 4);
        assert_abs_diff_eq!(v[2], (0.15f64).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(v[3], (0.15f64).cos(), epsilon = 1e-15);
        let back: Quat = serde_json::from_str(&s).unwrap();
        assert!(quat_error(&back, &q).vector().norm() < 1e-15);
    }
}
