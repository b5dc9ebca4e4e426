//! Frame-aware geometric primitives.
//!
//! Quaternions are stored with the vector part first and the scalar part last,
//! `(x, y, z, w)`, which is also the layout of `nalgebra::Quaternion::coords`.
//! All quaternions are Hamilton quaternions; `q_ab` rotates vectors from frame
//! `b` into frame `a`, i.e. `v_a = q_ab * v_b`.

use nalgebra::{Isometry2, Isometry3, Matrix3, Quaternion, Translation3, UnitQuaternion, Vector2, Vector3, Vector4};

/// Point or vector on the writing plane (T frame x, y).
pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type UnitQuat = UnitQuaternion<f64>;
/// Rigid transform `T_ab` (rotation + translation in meters).
pub type Transform = Isometry3<f64>;
/// Planar rigid transform.
pub type Rigid2 = Isometry2<f64>;

/// World-frame unit vectors.
pub const E_X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
pub const E_Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

/// Applies `t` to a planar point (rotation and translation).
pub fn transform_point2(t: &Rigid2, p: &Vec2) -> Vec2 {
    t.transform_point(&(*p).into()).coords
}

/// Skew-symmetric cross-product matrix, `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Normalizes and flips the double cover so that the scalar part is non-negative.
pub fn canonical(q: Quaternion<f64>) -> UnitQuat {
    let q = if q.w < 0.0 { -q } else { q };
    UnitQuaternion::from_quaternion(q)
}

/// Builds a canonical unit quaternion from `(x, y, z, w)` components.
pub fn quat_from_xyzw(x: f64, y: f64, z: f64, w: f64) -> UnitQuat {
    canonical(Quaternion::new(w, x, y, z))
}

/// `Ω(ω)` for body-frame rates acting on a `(vector; scalar)` quaternion, so that
/// `q̇ = ½ Ω(ω) q` equals `½ q ⊗ (ω, 0)`.
pub fn omega_matrix(omega: &Vec3) -> nalgebra::Matrix4<f64> {
    let s = skew(omega);
    #[rustfmt::skip]
    let m = nalgebra::Matrix4::new(
        -s[(0, 0)], -s[(0, 1)], -s[(0, 2)], omega.x,
        -s[(1, 0)], -s[(1, 1)], -s[(1, 2)], omega.y,
        -s[(2, 0)], -s[(2, 1)], -s[(2, 2)], omega.z,
        -omega.x,   -omega.y,   -omega.z,   0.0,
    );
    m
}

/// Quaternion kinematics for body rates: returns `½ Ω(ω) q` as `(x, y, z, w)`.
///
/// Accepts any 4-vector so it can be evaluated on the unnormalized intermediate
/// stages of an integrator.
pub fn quat_derivative_coords(q: &Vector4<f64>, omega_b: &Vec3) -> Vector4<f64> {
    0.5 * omega_matrix(omega_b) * q
}

pub fn quat_derivative(q: &UnitQuat, omega_b: &Vec3) -> Vector4<f64> {
    quat_derivative_coords(&q.coords, omega_b)
}

/// Rotation about `axis` by `angle`, canonicalized.
pub fn rotation(axis: &Vec3, angle: f64) -> UnitQuat {
    let q = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
    canonical(*q.quaternion())
}

pub fn rot_z(angle: f64) -> UnitQuat {
    rotation(&E_Z, angle)
}

/// Exponential map of a rotation vector.
pub fn exp_rotvec(theta: &Vec3) -> UnitQuat {
    UnitQuaternion::from_scaled_axis(*theta)
}

/// Logarithm of the relative rotation `q_from⁻¹ ⊗ q_to` as a rotation vector.
pub fn boxminus(q_to: &UnitQuat, q_from: &UnitQuat) -> Vec3 {
    let mut d = q_from.inverse() * q_to;
    if d.w < 0.0 {
        d = UnitQuaternion::new_unchecked(-d.into_inner());
    }
    d.scaled_axis()
}

pub fn transform(translation: Vec3, rotation: UnitQuat) -> Transform {
    Isometry3::from_parts(Translation3::from(translation), rotation)
}

/// Rotation whose columns are the given orthonormal axes.
pub fn rotation_from_axes(x: &Vec3, y: &Vec3, z: &Vec3) -> UnitQuat {
    let m = Mat3::from_columns(&[*x, *y, *z]);
    let r = nalgebra::Rotation3::from_matrix_unchecked(m);
    canonical(*UnitQuaternion::from_rotation_matrix(&r).quaternion())
}
