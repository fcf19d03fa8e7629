//! Rigid-body poses, pose errors and goal tolerance predicates.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Below this rotation angle the rotation axis is considered undefined.
pub const ANGLE_FLOOR: f64 = 1e-7;

/// A rigid transform: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: Matrix3::identity(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: Matrix3<f64>) -> Self {
        Self {
            translation,
            rotation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), Matrix3::identity())
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self::new(Vector3::zeros(), rotation)
    }

    /// Rigid-body composition `self ∘ other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.translation + self.rotation * other.translation,
            rotation: self.rotation * other.rotation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            translation: -(rt * self.translation),
            rotation: rt,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Checks `RᵀR = I` and `det R = 1` within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        is_rotation(&self.rotation, tol) && self.translation.iter().all(|v| v.is_finite())
    }

    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        (self.translation - other.translation).amax() <= tol
            && (self.rotation - other.rotation).amax() <= tol
    }
}

pub fn is_rotation(r: &Matrix3<f64>, tol: f64) -> bool {
    (r.transpose() * r - Matrix3::identity()).amax() <= tol && (r.determinant() - 1.0).abs() <= tol
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues' formula for `exp(angle · [axis]×)`; `axis` need not be normalized.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let n = axis.norm();
    if n == 0.0 || angle == 0.0 {
        return Matrix3::identity();
    }
    let k = skew(&(axis / n));
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Rotation from a rotation vector (axis scaled by angle).
pub fn exp_rotation(rotation_vector: &Vector3<f64>) -> Matrix3<f64> {
    axis_angle(rotation_vector, rotation_vector.norm())
}

/// Rotation vector of `r`; zero for rotations below [`ANGLE_FLOOR`].
pub fn log_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    match rotation_axis(r) {
        Ok(n) => n * rotation_angle(r),
        Err(_) => {
            // first-order: R ≈ I + [w]×
            Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5
        }
    }
}

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    axis_angle(&Vector3::x(), angle)
}

pub fn rot_y(angle: f64) -> Matrix3<f64> {
    axis_angle(&Vector3::y(), angle)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    axis_angle(&Vector3::z(), angle)
}

/// File-facing pose: translation plus rotation vector (axis scaled by angle).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Placement {
    #[serde(rename = "translation_m")]
    pub translation: [f64; 3],
    #[serde(rename = "rotation_vector_rad", default)]
    pub rotation_vector: [f64; 3],
}

impl Placement {
    pub fn from_translation(translation: [f64; 3]) -> Self {
        Self {
            translation,
            rotation_vector: [0.0; 3],
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(
            Vector3::from(self.translation),
            exp_rotation(&Vector3::from(self.rotation_vector)),
        )
    }
}

/// Offset of an actual pose from a desired one, expressed in the desired frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    pub translation_error: Vector3<f64>,
    pub rotation_error: Matrix3<f64>,
}

impl PoseError {
    pub fn zero() -> Self {
        Self {
            translation_error: Vector3::zeros(),
            rotation_error: Matrix3::identity(),
        }
    }
}

/// `t_e = R_dᵀ (t_a − t_d)`, `R_e = R_dᵀ R_a`.
pub fn pose_error(desired: &Pose, actual: &Pose) -> PoseError {
    let rdt = desired.rotation.transpose();
    PoseError {
        translation_error: rdt * (actual.translation - desired.translation),
        rotation_error: rdt * actual.rotation,
    }
}

/// Angle of rotation by Euler's rotation theorem, in `[0, π]`.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let c = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos()
}

/// Unit rotation axis `n` with `R = exp(φ [n]×)`.
pub fn rotation_axis(r: &Matrix3<f64>) -> Result<Vector3<f64>, GeometryError> {
    let phi = rotation_angle(r);
    if phi <= ANGLE_FLOOR {
        return Err(GeometryError::DegenerateRotation { angle: phi });
    }
    let w = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if phi < std::f64::consts::FRAC_PI_2 {
        return Ok(w / (2.0 * phi.sin()));
    }
    // sin φ loses precision near π: recover n nᵀ from the symmetric part instead.
    let c = phi.cos();
    let sym = (r + r.transpose()) * 0.5;
    let nnt = (sym - Matrix3::identity() * c) / (1.0 - c);
    let k = (0..3)
        .max_by(|&a, &b| nnt[(a, a)].total_cmp(&nnt[(b, b)]))
        .unwrap_or(0);
    let mut n: Vector3<f64> = nnt.column(k).into_owned();
    n /= n.norm();
    if n.dot(&w) < 0.0 {
        n = -n;
    }
    Ok(n)
}

/// Box translation tolerance plus an axis-angle rotation allowance about `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    #[serde(rename = "box_m")]
    pub box_bounds: [f64; 3],
    pub axis: [f64; 3],
    #[serde(rename = "max_angle_rad")]
    pub max_angle: f64,
    #[serde(rename = "axis_epsilon")]
    pub axis_epsilon: [f64; 3],
}

impl ToleranceSpec {
    /// Drilling tolerance: 0.2 mm laterally, 10 mm along the drill axis, free spin about z,
    /// 2° otherwise.
    pub fn drilling() -> Self {
        Self {
            box_bounds: [0.2e-3, 0.2e-3, 10e-3],
            axis: [0.0, 0.0, 1.0],
            max_angle: 2f64.to_radians(),
            axis_epsilon: [1e-3; 3],
        }
    }

    pub fn axis_vector(&self) -> Vector3<f64> {
        Vector3::from(self.axis)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.box_bounds.iter().any(|b| !(*b >= 0.0)) {
            return Err("box_m entries must be >= 0".into());
        }
        let n = self.axis_vector().norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(format!("axis must be a unit vector (norm {n})"));
        }
        if self.axis_epsilon.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err("axis_epsilon entries must lie in (0, 1)".into());
        }
        if !(self.max_angle >= 0.0) {
            return Err("max_angle_rad must be >= 0".into());
        }
        Ok(())
    }
}

pub fn euclidean_tolerance_met(e: &PoseError, t: &ToleranceSpec) -> bool {
    e.translation_error
        .iter()
        .zip(t.box_bounds.iter())
        .all(|(err, bound)| err.abs() <= *bound)
}

pub fn axis_tolerance_met(e: &PoseError, t: &ToleranceSpec) -> bool {
    let phi = rotation_angle(&e.rotation_error);
    if phi <= t.max_angle {
        return true;
    }
    // numerically the identity; no axis to compare
    let Ok(n) = rotation_axis(&e.rotation_error) else {
        return true;
    };
    let u = t.axis_vector();
    let within = |d: Vector3<f64>| d.iter().zip(t.axis_epsilon.iter()).all(|(v, eps)| v.abs() <= *eps);
    within(n - u) || within(n + u)
}

pub fn tolerance_met(e: &PoseError, t: &ToleranceSpec) -> bool {
    euclidean_tolerance_met(e, t) && axis_tolerance_met(e, t)
}

/// Weights of the scalar pose distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceWeights {
    #[serde(rename = "translation_per_m")]
    pub w_t: f64,
    #[serde(rename = "rotation_per_rad")]
    pub w_r: f64,
}

impl Default for DistanceWeights {
    fn default() -> Self {
        Self { w_t: 1.0, w_r: 0.5 }
    }
}

/// `w_t ‖t_e‖ + w_R φ(R_e)`.
pub fn scalar_distance(e: &PoseError, w: &DistanceWeights) -> f64 {
    w.w_t * e.translation_error.norm() + w.w_r * rotation_angle(&e.rotation_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rand_pose(seed: u64) -> Pose {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let t = Vector3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        Pose::new(t, exp_rotation(&v))
    }

    #[test]
    fn compose_identity_inverse_translation() {
        let p = rand_pose(3);
        assert!(Pose::identity().compose(&p).approx_eq(&p, 1e-15));
        assert!(p.compose(&p.inverse()).approx_eq(&Pose::identity(), 1e-12));
        let a = Pose::from_translation(1.0, 0.0, 0.0).compose(&Pose::from_translation(0.0, 2.0, 0.0));
        assert_eq!(a.translation, Vector3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn compose_is_associative() {
        let (a, b, c) = (rand_pose(1), rand_pose(2), rand_pose(3));
        assert!(a.compose(&b).compose(&c).approx_eq(&a.compose(&b.compose(&c)), 1e-12));
    }

    #[test]
    fn pose_error_examples() {
        let p = rand_pose(9);
        let e = pose_error(&p, &p);
        assert!(e.translation_error.norm() < 1e-12);
        assert!((e.rotation_error - Matrix3::identity()).amax() < 1e-12);

        let e = pose_error(&Pose::identity(), &Pose::from_translation(0.0, 0.0, 0.01));
        assert_eq!(e.translation_error, Vector3::new(0.0, 0.0, 0.01));

        let d = Pose::from_rotation(rot_z(30f64.to_radians()));
        let a = Pose::from_rotation(rot_z(45f64.to_radians()));
        let e = pose_error(&d, &a);
        assert!((e.rotation_error - rot_z(15f64.to_radians())).amax() < 1e-12);
    }

    #[test]
    fn pose_error_is_in_desired_frame() {
        let d = Pose::new(Vector3::new(1.0, 0.0, 0.0), rot_y(FRAC_PI_2));
        let a = Pose::new(Vector3::new(1.0, 0.0, -0.01), rot_y(FRAC_PI_2));
        // desired z axis points along world +x; world -z offset is desired-frame +x
        let e = pose_error(&d, &a);
        assert!((e.translation_error - Vector3::new(0.01, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_angle_examples() {
        assert_eq!(rotation_angle(&Matrix3::identity()), 0.0);
        assert!((rotation_angle(&rot_z(FRAC_PI_2)) - FRAC_PI_2).abs() < 1e-12);
        let r = axis_angle(&Vector3::new(0.3, -0.8, 0.52), 1.234);
        assert!((r.trace() - (1.0 + 2.0 * 1.234f64.cos())).abs() < 1e-12);
        assert!((rotation_angle(&r) - 1.234).abs() < 1e-12);
    }

    #[test]
    fn rotation_axis_examples() {
        let n = rotation_axis(&rot_z(FRAC_PI_2)).unwrap();
        assert!((n - Vector3::z()).norm() < 1e-12);
        let n = rotation_axis(&rot_x(1.0)).unwrap();
        assert!((n - Vector3::x()).norm() < 1e-12);
        let u = Vector3::new(1.0, 2.0, 2.0).normalize();
        let n = rotation_axis(&axis_angle(&u, 0.7)).unwrap();
        assert!((n - Vector3::new(1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0)).norm() < 1e-12);
        assert!(matches!(
            rotation_axis(&Matrix3::identity()),
            Err(GeometryError::DegenerateRotation { .. })
        ));
    }

    #[test]
    fn rotation_axis_near_pi() {
        let u = Vector3::new(-0.2, 0.9, 0.4).normalize();
        for angle in [PI - 1e-9, PI - 1e-5, PI - 0.01, PI] {
            let n = rotation_axis(&axis_angle(&u, angle)).unwrap();
            let err = (n - u).norm().min((n + u).norm());
            assert!(err < 1e-7, "angle {angle}: {err}");
            assert!((exp_rotation(&(n * rotation_angle(&axis_angle(&u, angle)))) - axis_angle(&u, angle)).amax() < 1e-7);
        }
    }

    #[test]
    fn log_exp_round_trip() {
        for seed in 0..50 {
            let r = rand_pose(seed).rotation;
            assert!((exp_rotation(&log_rotation(&r)) - r).amax() < 1e-9);
        }
        let tiny = Vector3::new(1e-9, -2e-9, 0.5e-9);
        assert!((log_rotation(&exp_rotation(&tiny)) - tiny).norm() < 1e-15);
    }

    #[test]
    fn euclidean_tolerance_examples() {
        let t = ToleranceSpec::drilling();
        let mut e = PoseError::zero();
        assert!(euclidean_tolerance_met(&e, &t));
        e.translation_error = Vector3::new(0.3e-3, 0.0, 0.0);
        assert!(!euclidean_tolerance_met(&e, &t));
        e.translation_error = Vector3::new(0.1e-3, -0.1e-3, 9e-3);
        assert!(euclidean_tolerance_met(&e, &t));
    }

    #[test]
    fn axis_tolerance_examples() {
        let t = ToleranceSpec::drilling();
        let with_rot = |r| PoseError {
            translation_error: Vector3::zeros(),
            rotation_error: r,
        };
        assert!(axis_tolerance_met(&with_rot(rot_z(FRAC_PI_2)), &t));
        assert!(axis_tolerance_met(&with_rot(rot_x(1f64.to_radians())), &t));
        assert!(!axis_tolerance_met(&with_rot(rot_x(5f64.to_radians())), &t));
        // negative spin about the axis takes the -u clause
        assert!(axis_tolerance_met(&with_rot(rot_z(-2.0)), &t));
    }

    #[test]
    fn scalar_distance_examples() {
        let w = DistanceWeights { w_t: 1.0, w_r: 0.5 };
        assert_eq!(scalar_distance(&PoseError::zero(), &w), 0.0);
        let e = PoseError {
            translation_error: Vector3::new(3.0, 4.0, 0.0),
            rotation_error: Matrix3::identity(),
        };
        assert_eq!(scalar_distance(&e, &w), 5.0);
        let e = PoseError {
            translation_error: Vector3::zeros(),
            rotation_error: rot_z(0.5),
        };
        assert!((scalar_distance(&e, &w) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceSpec::drilling().validate().is_ok());
        let mut t = ToleranceSpec::drilling();
        t.axis = [0.0, 0.0, 2.0];
        assert!(t.validate().is_err());
        let mut t = ToleranceSpec::drilling();
        t.axis_epsilon = [0.0, 1e-3, 1e-3];
        assert!(t.validate().is_err());
        let mut t = ToleranceSpec::drilling();
        t.box_bounds[1] = -1.0;
        assert!(t.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit() -> impl Strategy<Value = Vector3<f64>> {
            (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
                .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
                .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
        }

        proptest! {
            #[test]
            fn angle_recovered(n in unit(), phi in 1e-6..(PI - 1e-6)) {
                prop_assert!((rotation_angle(&axis_angle(&n, phi)) - phi).abs() < 1e-8);
            }

            #[test]
            fn axis_tolerance_sign_symmetric(n in unit(), phi in 0.0..PI) {
                let e = PoseError { translation_error: Vector3::zeros(), rotation_error: axis_angle(&n, phi) };
                let t = ToleranceSpec::drilling();
                let mut flipped = t;
                flipped.axis = [-t.axis[0], -t.axis[1], -t.axis[2]];
                prop_assert_eq!(axis_tolerance_met(&e, &t), axis_tolerance_met(&e, &flipped));
            }

            #[test]
            fn euclidean_monotone(x in -1e-3..1e-3f64, y in -1e-3..1e-3f64, z in -2e-2..2e-2f64, s in 0.0..1.0f64) {
                let t = ToleranceSpec::drilling();
                let mut e = PoseError::zero();
                e.translation_error = Vector3::new(x, y, z);
                let before = euclidean_tolerance_met(&e, &t);
                e.translation_error *= s;
                prop_assert!(!before || euclidean_tolerance_met(&e, &t));
            }

            #[test]
            fn distance_zero_only_at_zero(x in -1.0..1.0f64, n in unit(), phi in 0.0..PI) {
                let e = PoseError { translation_error: Vector3::new(x, 0.0, 0.0), rotation_error: axis_angle(&n, phi) };
                let d = scalar_distance(&e, &DistanceWeights::default());
                prop_assert!(d >= 0.0);
                if x != 0.0 || phi > 1e-6 { prop_assert!(d > 0.0); }
            }
        }
    }
}
