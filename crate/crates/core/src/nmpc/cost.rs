//! Tracking errors and quadratic costs.

use nalgebra::{SMatrix, SVector};

use crate::dynamics::normal_contact_force;
use crate::geometry::{canonical, Vec3};
use crate::nmpc::{GainSet, InputWeight, StateWeights};
use crate::params::{ContactSurface, VehicleParams};
use crate::state::{ControlInput, InputVector, ReferencePoint, RigidBodyState};

/// Length of the stacked error: six 3-vectors, the scalar force error and the 7-dim input error.
pub const ERROR_DIM: usize = 23;

pub type ErrorVector = SVector<f64, ERROR_DIM>;
pub type ErrorWeight = SMatrix<f64, ERROR_DIM, ERROR_DIM>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTerms {
    pub mav_position: Vec3,
    pub ee_position: Vec3,
    pub velocity: Vec3,
    pub body_rate: Vec3,
    pub attitude: Vec3,
    pub force: f64,
    pub input: InputVector,
}

impl ErrorTerms {
    pub fn zero() -> Self {
        Self {
            mav_position: Vec3::zeros(),
            ee_position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            body_rate: Vec3::zeros(),
            attitude: Vec3::zeros(),
            force: 0.0,
            input: InputVector::zeros(),
        }
    }

    /// `[e_rB, e_rE, e_v, e_ω, e_q, e_f, e_u]`.
    pub fn to_vector(&self) -> ErrorVector {
        let mut e = ErrorVector::zeros();
        e.fixed_rows_mut::<3>(0).copy_from(&self.mav_position);
        e.fixed_rows_mut::<3>(3).copy_from(&self.ee_position);
        e.fixed_rows_mut::<3>(6).copy_from(&self.velocity);
        e.fixed_rows_mut::<3>(9).copy_from(&self.body_rate);
        e.fixed_rows_mut::<3>(12).copy_from(&self.attitude);
        e[15] = self.force;
        e.fixed_rows_mut::<7>(16).copy_from(&self.input);
        e
    }
}

/// Errors of `x`, `u` against `r`, given the world-frame end-effector position
/// and the modeled normal contact force.
pub fn error_vector(x: &RigidBodyState, u: &ControlInput, r: &ReferencePoint, ee_position_w: &Vec3, contact_force: f64) -> ErrorTerms {
    let c_b_br = x.orientation.inverse() * r.orientation;
    let q_err = canonical(*c_b_br.quaternion());
    let (ee, force) = if r.ee_tracking_enabled {
        (ee_position_w - r.ee_position, contact_force - r.contact_force)
    } else {
        (Vec3::zeros(), 0.0)
    };
    ErrorTerms {
        mav_position: x.position - r.mav_position,
        ee_position: ee,
        velocity: x.velocity - r.mav_velocity,
        body_rate: x.body_rate - c_b_br * r.body_rate,
        attitude: q_err.imag(),
        force,
        input: u.to_vector() - r.input.to_vector(),
    }
}

/// End-effector position in W and modeled normal contact force for `x` with
/// the arm commanded to `ee_arm` (A frame).
pub fn end_effector_state(x: &RigidBodyState, ee_arm: &Vec3, params: &VehicleParams, surface: &ContactSurface) -> (Vec3, f64) {
    let ee_w = x.position + x.orientation * params.arm_to_body(ee_arm);
    (ee_w, normal_contact_force(&ee_w, surface, &x.orientation, params))
}

/// [`error_vector`] with the end-effector quantities evaluated from the model.
pub fn model_errors(x: &RigidBodyState, u: &ControlInput, r: &ReferencePoint, params: &VehicleParams, surface: &ContactSurface) -> ErrorTerms {
    let (ee_w, f_c) = end_effector_state(x, &u.ee_position, params, surface);
    error_vector(x, u, r, &ee_w, f_c)
}

/// Terminal errors: the arm is taken at the reference input and `e_u` is zero.
pub fn terminal_errors(x: &RigidBodyState, r: &ReferencePoint, params: &VehicleParams, surface: &ContactSurface) -> ErrorTerms {
    let mut e = model_errors(x, &r.input, r, params, surface);
    e.input = InputVector::zeros();
    e
}

fn quad(e: &Vec3, q: &crate::geometry::Mat3) -> f64 {
    e.dot(&(q * e))
}

fn state_part(e: &ErrorTerms, w: &StateWeights) -> f64 {
    quad(&e.mav_position, &w.mav_position)
        + quad(&e.ee_position, &w.ee_position)
        + quad(&e.velocity, &w.velocity)
        + quad(&e.body_rate, &w.body_rate)
        + quad(&e.attitude, &w.attitude)
        + w.force * e.force * e.force
}

pub fn stage_cost(e: &ErrorTerms, gains: &GainSet) -> f64 {
    state_part(e, &gains.stage) + e.input.dot(&(gains.input * e.input))
}

pub fn terminal_cost(e: &ErrorTerms, gains: &GainSet) -> f64 {
    state_part(e, &gains.terminal)
}

/// Block-diagonal weight such that `eᵀ W e` equals the cost of the stacked error.
pub fn weight_matrix(w: &StateWeights, input: &InputWeight) -> ErrorWeight {
    let mut m = ErrorWeight::zeros();
    let blocks = [w.mav_position, w.ee_position, w.velocity, w.body_rate, w.attitude];
    for (k, b) in blocks.iter().enumerate() {
        m.fixed_view_mut::<3, 3>(3 * k, 3 * k).copy_from(b);
    }
    m[(15, 15)] = w.force;
    m.fixed_view_mut::<7, 7>(16, 16).copy_from(input);
    m
}
