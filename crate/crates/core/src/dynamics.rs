//! Hybrid MAV-arm-contact model and its fixed-step integrator.
//!
//! The arm is treated quasi-statically: it contributes the contact force acting
//! on the pen tip, the moment caused by displacing the end-effector mass from
//! its nominal position and the corresponding change of rotational inertia.

use nalgebra::{Matrix4x6, SVector, UnitQuaternion, Vector4};
use thiserror::Error;

use crate::geometry::{quat_derivative_coords, Mat3, UnitQuat, Vec3, E_Z};
use crate::params::{ContactSurface, VehicleParams, NUM_MOTORS};
use crate::state::{ControlInput, RigidBodyState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state derivative is not finite")]
    NonFinite,
    #[error("motor geometry is degenerate: allocation matrix has rank {0} < 4")]
    DegenerateGeometry(usize),
}

pub type MotorThrusts = SVector<f64, NUM_MOTORS>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
}

impl Wrench {
    pub fn zero() -> Self {
        Self {
            force: Vec3::zeros(),
            moment: Vec3::zeros(),
        }
    }
}

/// Body wrench produced by the six rotors.
pub fn motor_wrench(f: &MotorThrusts, params: &VehicleParams) -> Wrench {
    let mut moment = Vec3::zeros();
    for i in 0..NUM_MOTORS {
        moment += f[i] * params.motor_positions[i].cross(&E_Z)
            + params.spin_signs[i] * params.thrust_moment_coeff * f[i] * E_Z;
    }
    Wrench {
        force: Vec3::new(0.0, 0.0, f.sum()),
        moment,
    }
}

/// Linear map from motor thrusts to `(M_r; T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationMatrix(pub Matrix4x6<f64>);

impl AllocationMatrix {
    pub fn build(params: &VehicleParams) -> Result<Self, DynamicsError> {
        let mut a = Matrix4x6::zeros();
        for i in 0..NUM_MOTORS {
            let r = params.motor_positions[i];
            let m = r.cross(&E_Z) + params.spin_signs[i] * params.thrust_moment_coeff * E_Z;
            a.fixed_view_mut::<3, 1>(0, i).copy_from(&m);
            a[(3, i)] = 1.0;
        }
        let rank = a.rank(1e-9);
        if rank < 4 {
            return Err(DynamicsError::DegenerateGeometry(rank));
        }
        Ok(Self(a))
    }

    pub fn apply(&self, f: &MotorThrusts) -> Vector4<f64> {
        self.0 * f
    }
}

/// Spring contact force on the pen tip, expressed in the end-effector frame.
///
/// The force acts along the outward surface normal with magnitude
/// `k_s * penetration`; it vanishes when the tip is in front of the surface or
/// outside its extents.
pub fn contact_force(ee_position_w: &Vec3, surface: &ContactSurface, q_wb: &UnitQuat, params: &VehicleParams) -> Vec3 {
    let depth = surface.penetration(ee_position_w);
    if depth <= 0.0 {
        return Vec3::zeros();
    }
    let f_w = surface.force_at_depth(depth) * surface.normal_w();
    let c_we = q_wb * params.c_be();
    c_we.inverse_transform_vector(&f_w)
}

/// Normal contact force `f_c`, the E-frame z-component of the contact force.
pub fn normal_contact_force(ee_position_w: &Vec3, surface: &ContactSurface, q_wb: &UnitQuat, params: &VehicleParams) -> f64 {
    contact_force(ee_position_w, surface, q_wb, params).z
}

/// Wrench on the body due to the contact force and the displaced end-effector mass.
pub fn end_effector_wrench(ee_position_b: &Vec3, q_wb: &UnitQuat, contact_e: &Vec3, params: &VehicleParams) -> Wrench {
    let force = params.c_be() * contact_e;
    let weight_b = q_wb.inverse_transform_vector(&(params.ee_mass * params.gravity));
    let moment = ee_position_b.cross(&force) + (ee_position_b - params.nominal_ee_position).cross(&weight_b);
    Wrench { force, moment }
}

/// `J_c = J + m_e diag(B_r_BE - B_r_BE0)²`.
pub fn combined_inertia(ee_position_b: &Vec3, params: &VehicleParams) -> Mat3 {
    let d = ee_position_b - params.nominal_ee_position;
    Mat3::from_diagonal(&(params.inertia_diag + params.ee_mass * d.component_mul(&d)))
}

/// Time derivative of the state; the quaternion rate is in `(x, y, z, w)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub velocity: Vec3,
    pub orientation: Vector4<f64>,
    pub body_rate: Vec3,
}

impl StateDerivative {
    fn is_finite(&self) -> bool {
        let s = self.position.sum() + self.velocity.sum() + self.orientation.sum() + self.body_rate.sum();
        s.is_finite()
    }
}

/// State with a raw (possibly unnormalized) quaternion, used for integrator stages.
#[derive(Debug, Clone, Copy)]
struct RawState {
    p: Vec3,
    v: Vec3,
    q: Vector4<f64>,
    w: Vec3,
}

impl RawState {
    fn from_state(x: &RigidBodyState) -> Self {
        Self {
            p: x.position,
            v: x.velocity,
            q: x.orientation.coords,
            w: x.body_rate,
        }
    }

    fn step(&self, k: &StateDerivative, h: f64) -> Self {
        Self {
            p: self.p + h * k.position,
            v: self.v + h * k.velocity,
            q: self.q + h * k.orientation,
            w: self.w + h * k.body_rate,
        }
    }
}

fn derivative_raw(x: &RawState, u: &ControlInput, params: &VehicleParams, surface: &ContactSurface) -> StateDerivative {
    let q_n = x.q.normalize();
    let q_wb = UnitQuaternion::new_unchecked(nalgebra::Quaternion::from(q_n));
    let ee_b = params.arm_to_body(&u.ee_position);
    let ee_w = x.p + q_wb * ee_b;

    let f_c = contact_force(&ee_w, surface, &q_wb, params);
    let ee = end_effector_wrench(&ee_b, &q_wb, &f_c, params);
    let j_c = combined_inertia(&ee_b, params).diagonal();

    let force_b = Vec3::new(0.0, 0.0, u.thrust) + ee.force;
    let accel = q_wb * force_b / params.combined_mass() + params.gravity;
    let h = j_c.component_mul(&x.w);
    let torque = u.moment + ee.moment - x.w.cross(&h);
    StateDerivative {
        position: x.v,
        velocity: accel,
        orientation: quat_derivative_coords(&x.q, &x.w),
        body_rate: torque.component_div(&j_c),
    }
}

/// Continuous-time combined dynamics for input `u` held constant.
pub fn state_derivative(x: &RigidBodyState, u: &ControlInput, params: &VehicleParams, surface: &ContactSurface) -> StateDerivative {
    derivative_raw(&RawState::from_state(x), u, params, surface)
}

/// Classical RK4 step followed by quaternion re-normalization.
pub fn rk4_step(
    x: &RigidBodyState,
    u: &ControlInput,
    h: f64,
    params: &VehicleParams,
    surface: &ContactSurface,
) -> Result<RigidBodyState, DynamicsError> {
    debug_assert!(h > 0.0);
    let x0 = RawState::from_state(x);
    let k1 = derivative_raw(&x0, u, params, surface);
    let k2 = derivative_raw(&x0.step(&k1, 0.5 * h), u, params, surface);
    let k3 = derivative_raw(&x0.step(&k2, 0.5 * h), u, params, surface);
    let k4 = derivative_raw(&x0.step(&k3, h), u, params, surface);
    if !(k1.is_finite() && k2.is_finite() && k3.is_finite() && k4.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let combine = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (a + 2.0 * b + 2.0 * c + d) * (h / 6.0);
    let dq = (k1.orientation + 2.0 * k2.orientation + 2.0 * k3.orientation + k4.orientation) * (h / 6.0);
    let q = (x0.q + dq).normalize();
    let next = RigidBodyState {
        position: x0.p + combine(k1.position, k2.position, k3.position, k4.position),
        velocity: x0.v + combine(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
        orientation: UnitQuaternion::new_unchecked(nalgebra::Quaternion::from(q)),
        body_rate: x0.w + combine(k1.body_rate, k2.body_rate, k3.body_rate, k4.body_rate),
    };
    if !next.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    Ok(next)
}
