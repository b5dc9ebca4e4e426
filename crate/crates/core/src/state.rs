//! Control state, control input and reference samples.

use nalgebra::SVector;

use crate::geometry::{boxminus, exp_rotvec, UnitQuat, Vec3};
use crate::params::VehicleParams;

/// Dimension of the state tangent space: δp, δv, δθ, δω.
pub const STATE_DIM: usize = 12;
pub const INPUT_DIM: usize = 7;

pub type TangentVector = SVector<f64, STATE_DIM>;
pub type InputVector = SVector<f64, INPUT_DIM>;

/// MAV state `x = (p_WB, v_WB, q_WB, ω_B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub orientation: UnitQuat,
    pub body_rate: Vec3,
}

impl RigidBodyState {
    pub fn at_rest(position: Vec3, orientation: UnitQuat) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            orientation,
            body_rate: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.orientation.coords.iter().all(|x| x.is_finite())
            && self.body_rate.iter().all(|x| x.is_finite())
    }

    /// `x ⊞ δ`, with the attitude perturbed on the right (body frame).
    pub fn retract(&self, delta: &TangentVector) -> Self {
        let d = |i: usize| Vec3::new(delta[i], delta[i + 1], delta[i + 2]);
        Self {
            position: self.position + d(0),
            velocity: self.velocity + d(3),
            orientation: self.orientation * exp_rotvec(&d(6)),
            body_rate: self.body_rate + d(9),
        }
    }

    /// `other ⊟ self`, the inverse of [`retract`](Self::retract).
    pub fn local(&self, other: &Self) -> TangentVector {
        let mut out = TangentVector::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&(other.position - self.position));
        out.fixed_rows_mut::<3>(3).copy_from(&(other.velocity - self.velocity));
        out.fixed_rows_mut::<3>(6).copy_from(&boxminus(&other.orientation, &self.orientation));
        out.fixed_rows_mut::<3>(9).copy_from(&(other.body_rate - self.body_rate));
        out
    }
}

/// Control input `u = (M_r, T, A_r_AE)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub moment: Vec3,
    pub thrust: f64,
    /// Commanded end-effector position in the arm frame A.
    pub ee_position: Vec3,
}

impl ControlInput {
    /// Zero moment, weight-compensating thrust and the arm at its nominal pose.
    pub fn hover(params: &VehicleParams) -> Self {
        Self {
            moment: Vec3::zeros(),
            thrust: params.hover_thrust(),
            ee_position: params.nominal_ee_arm(),
        }
    }

    pub fn to_vector(&self) -> InputVector {
        InputVector::from_column_slice(&[
            self.moment.x,
            self.moment.y,
            self.moment.z,
            self.thrust,
            self.ee_position.x,
            self.ee_position.y,
            self.ee_position.z,
        ])
    }

    pub fn from_vector(v: &InputVector) -> Self {
        Self {
            moment: Vec3::new(v[0], v[1], v[2]),
            thrust: v[3],
            ee_position: Vec3::new(v[4], v[5], v[6]),
        }
    }

    /// Wrench demand `(M_r; T)` forwarded to the allocation.
    pub fn wrench_demand(&self) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::new(self.moment.x, self.moment.y, self.moment.z, self.thrust)
    }
}

/// Which part of a mission a reference sample belongs to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    #[default]
    Approach,
    Write,
    Return,
}

/// Time-stamped reference for the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub time: f64,
    pub mav_position: Vec3,
    pub mav_velocity: Vec3,
    pub orientation: UnitQuat,
    pub body_rate: Vec3,
    pub ee_position: Vec3,
    pub ee_velocity: Vec3,
    /// Normal contact force reference `f_c^r` (N).
    pub contact_force: f64,
    /// When false the end-effector position and force errors carry no weight.
    pub ee_tracking_enabled: bool,
    pub pen_down: bool,
    pub stage: Stage,
    pub input: ControlInput,
}

impl ReferencePoint {
    /// Static hover reference with the end effector at its nominal position.
    pub fn hover(time: f64, position: Vec3, orientation: UnitQuat, params: &VehicleParams) -> Self {
        Self {
            time,
            mav_position: position,
            mav_velocity: Vec3::zeros(),
            orientation,
            body_rate: Vec3::zeros(),
            ee_position: position + orientation * params.nominal_ee_position,
            ee_velocity: Vec3::zeros(),
            contact_force: 0.0,
            ee_tracking_enabled: false,
            pen_down: false,
            stage: Stage::Approach,
            input: ControlInput::hover(params),
        }
    }

    pub fn mav_state(&self) -> RigidBodyState {
        RigidBodyState {
            position: self.mav_position,
            velocity: self.mav_velocity,
            orientation: self.orientation,
            body_rate: self.body_rate,
        }
    }
}
