//! Receding-horizon hybrid force/position controller.
//!
//! The optimal control problem is solved with a warm-started Gauss-Newton
//! sequential linear-quadratic iteration (see [`solver`]). Input bounds are
//! enforced by clamping inside the forward rollout, so every returned sequence
//! is feasible and its predicted states are an exact rollout of the model.

pub mod controller;
pub mod cost;
pub mod solver;

use nalgebra::{SMatrix, SVector};

use crate::delta::SafetyBox;
use crate::geometry::Mat3;
use crate::params::VehicleParams;
use crate::state::{ControlInput, InputVector, RigidBodyState, INPUT_DIM, STATE_DIM};

pub use controller::{Controller, ControllerOutput, ReferenceSource};
pub use cost::{error_vector, stage_cost, terminal_cost, ErrorTerms};
pub use solver::SlqSolver;

pub type InputWeight = SMatrix<f64, INPUT_DIM, INPUT_DIM>;
/// Time-varying feedback gain on the state tangent deviation.
pub type FeedbackGain = SMatrix<f64, INPUT_DIM, STATE_DIM>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NmpcError {
    #[error("expected {expected} reference samples, got {got}")]
    ReferenceLength { expected: usize, got: usize },
    #[error("state estimate is not finite")]
    NonFiniteState,
    #[error("optimal control problem diverged (non-finite cost)")]
    Diverged,
}

/// Quadratic weights of the state errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateWeights {
    pub mav_position: Mat3,
    pub ee_position: Mat3,
    pub velocity: Mat3,
    pub body_rate: Mat3,
    pub attitude: Mat3,
    pub force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet {
    pub stage: StateWeights,
    pub input: InputWeight,
    pub terminal: StateWeights,
}

fn is_psd(m: &Mat3) -> bool {
    let sym = 0.5 * (m + m.transpose());
    (m - m.transpose()).amax() < 1e-12 && sym.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12)
}

impl StateWeights {
    pub fn diagonal(mav_position: f64, ee_position: f64, velocity: f64, body_rate: f64, attitude: f64, force: f64) -> Self {
        let d = |v: f64| Mat3::identity() * v;
        Self {
            mav_position: d(mav_position),
            ee_position: d(ee_position),
            velocity: d(velocity),
            body_rate: d(body_rate),
            attitude: d(attitude),
            force,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let blocks = [
            ("mav_position", &self.mav_position),
            ("ee_position", &self.ee_position),
            ("velocity", &self.velocity),
            ("body_rate", &self.body_rate),
            ("attitude", &self.attitude),
        ];
        for (name, m) in blocks {
            if !is_psd(m) {
                return Err(format!("gain {name} is not symmetric positive semi-definite"));
            }
        }
        if !(self.force >= 0.0) {
            return Err("force gain must be non-negative".into());
        }
        Ok(())
    }
}

impl GainSet {
    pub fn validate(&self) -> Result<(), String> {
        self.stage.validate()?;
        self.terminal.validate()?;
        let sym = 0.5 * (self.input + self.input.transpose());
        if (self.input - self.input.transpose()).amax() > 1e-12 || sym.symmetric_eigenvalues().iter().any(|&e| e < -1e-12) {
            return Err("input gain is not symmetric positive semi-definite".into());
        }
        Ok(())
    }
}

impl Default for GainSet {
    /// Tuning defaults; end-effector errors dominate MAV errors.
    fn default() -> Self {
        let stage = StateWeights::diagonal(20.0, 200.0, 5.0, 2.0, 10.0, 5.0);
        Self {
            stage,
            input: InputWeight::from_diagonal(&SVector::<f64, 7>::from_column_slice(&[0.1, 0.1, 0.1, 0.01, 50.0, 50.0, 50.0])),
            terminal: stage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcpConfig {
    pub horizon_steps: usize,
    /// Discretization step (s).
    pub step: f64,
    pub u_lb: InputVector,
    pub u_ub: InputVector,
    /// Solver iterations per control cycle.
    pub max_iterations: usize,
    /// Relative cost decrease below which the iteration stops early.
    pub tolerance: f64,
}

impl OcpConfig {
    /// Bounds `|M| <= moment_max`, `0 <= T <= 6 f_max` and the arm safety box.
    pub fn with_bounds(params: &VehicleParams, safety: &SafetyBox, moment_max: f64) -> Self {
        let t_max = 6.0 * params.f_max;
        let u_lb = ControlInput {
            moment: -crate::Vec3::repeat(moment_max),
            thrust: 6.0 * params.f_min,
            ee_position: safety.min,
        };
        let u_ub = ControlInput {
            moment: crate::Vec3::repeat(moment_max),
            thrust: t_max,
            ee_position: safety.max,
        };
        Self {
            horizon_steps: 200,
            step: 0.01,
            u_lb: u_lb.to_vector(),
            u_ub: u_ub.to_vector(),
            max_iterations: 3,
            tolerance: 1e-4,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon_steps as f64 * self.step
    }

    pub fn clamp(&self, u: &InputVector) -> InputVector {
        u.zip_zip_map(&self.u_lb, &self.u_ub, |v, lo, hi| v.clamp(lo, hi))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.horizon_steps == 0 {
            return Err("horizon must contain at least one step".into());
        }
        if !(self.step > 0.0) {
            return Err("discretization step must be positive".into());
        }
        if self.u_lb.iter().zip(self.u_ub.iter()).any(|(lo, hi)| !(lo <= hi)) {
            return Err("input lower bounds must not exceed upper bounds".into());
        }
        if self.max_iterations == 0 {
            return Err("at least one solver iteration is required".into());
        }
        Ok(())
    }
}

impl Default for OcpConfig {
    fn default() -> Self {
        Self::with_bounds(&VehicleParams::default(), &SafetyBox::default(), 2.0)
    }
}

/// Optimized input sequence and its predicted trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSolution {
    pub inputs: Vec<ControlInput>,
    /// `N + 1` states; `states[0]` is the initial state.
    pub states: Vec<RigidBodyState>,
    pub cost: f64,
    /// Cost of the shifted previous solution, if one was supplied.
    pub warm_start_cost: Option<f64>,
    /// Cost of the constant hover input sequence.
    pub hover_cost: f64,
    pub iterations: usize,
    /// Modeled normal contact force along the horizon.
    pub predicted_contact: Vec<f64>,
    /// Local feedback gains about `states`, one per input; zero if none were computed.
    pub feedback: Vec<FeedbackGain>,
}

fn shift<T: Copy>(v: &[T]) -> Vec<T> {
    let mut out: Vec<T> = v.iter().skip(1).copied().collect();
    if let Some(last) = v.last() {
        out.push(*last);
    }
    out
}

impl HorizonSolution {
    /// Drops the first input and repeats the last one.
    pub fn shifted(&self) -> Vec<ControlInput> {
        shift(&self.inputs)
    }

    /// The whole solution advanced by one step: inputs, states and gains are
    /// shifted and their last entries repeated.
    pub fn advanced(&self) -> Self {
        Self {
            inputs: shift(&self.inputs),
            states: shift(&self.states),
            feedback: shift(&self.feedback),
            predicted_contact: shift(&self.predicted_contact),
            ..self.clone()
        }
    }

    pub fn max_predicted_contact(&self) -> f64 {
        self.predicted_contact.iter().copied().fold(0.0, f64::max)
    }
}
