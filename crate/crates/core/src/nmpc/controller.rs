//! Receding-horizon loop: one optimization per control tick.

use nalgebra::Vector4;

use crate::delta::{inverse_kinematics, DeltaArm, JointAngles};
use crate::geometry::Vec3;
use crate::nmpc::{HorizonSolution, NmpcError, SlqSolver};
use crate::state::{ControlInput, ReferencePoint, RigidBodyState};

/// Supplies reference samples by mission time.
pub trait ReferenceSource {
    /// Reference at time `t`. Past the end of the mission the last sample is held.
    fn sample(&self, t: f64) -> ReferencePoint;
}

impl<F: Fn(f64) -> ReferencePoint> ReferenceSource for F {
    fn sample(&self, t: f64) -> ReferencePoint {
        self(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerOutput {
    /// Optimal first input, as solved.
    pub input: ControlInput,
    /// `(M_r; T)` forwarded to the allocation.
    pub wrench_demand: Vector4<f64>,
    /// End-effector command in A after projection onto the workspace.
    pub ee_command: Vec3,
    pub joint_angles: JointAngles,
    pub cost: f64,
    pub warm_start_cost: Option<f64>,
    pub hover_cost: f64,
    pub iterations: usize,
    pub max_predicted_contact: f64,
    /// True when the solver diverged and the shifted previous solution was used.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct Controller {
    solver: SlqSolver,
    arm: DeltaArm,
    previous: Option<HorizonSolution>,
    /// Joint angles of the last emitted command, reused if IK of a projected
    /// point fails on round-off at the workspace boundary.
    last_joints: JointAngles,
}

impl Controller {
    pub fn new(solver: SlqSolver, arm: DeltaArm) -> Self {
        let last_joints = inverse_kinematics(&arm.nominal, &arm.geometry).unwrap_or(JointAngles([0.0; 3]));
        Self {
            solver,
            arm,
            previous: None,
            last_joints,
        }
    }

    pub fn solver(&self) -> &SlqSolver {
        &self.solver
    }

    pub fn arm(&self) -> &DeltaArm {
        &self.arm
    }

    pub fn last_solution(&self) -> Option<&HorizonSolution> {
        self.previous.as_ref()
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    /// References for the horizon starting at `t`.
    pub fn horizon_references(&self, t: f64, source: &dyn ReferenceSource) -> Vec<ReferencePoint> {
        let cfg = self.solver.config();
        (0..=cfg.horizon_steps).map(|i| source.sample(t + i as f64 * cfg.step)).collect()
    }

    /// Solves the problem at `x_hat` and time `t` and splits the first input
    /// into the wrench demand and the arm command.
    pub fn cycle(&mut self, x_hat: &RigidBodyState, t: f64, source: &dyn ReferenceSource) -> Result<ControllerOutput, NmpcError> {
        let refs = self.horizon_references(t, source);
        let (solution, fallback) = match self.solver.solve(x_hat, &refs, self.previous.as_ref()) {
            Ok(s) => (s, false),
            Err(NmpcError::Diverged) => match self.previous.take() {
                Some(prev) => (prev.advanced(), true),
                None => return Err(NmpcError::Diverged),
            },
            Err(e) => return Err(e),
        };
        let input = solution.inputs[0];
        let ee_command = self.arm.project(&input.ee_position);
        let joint_angles = inverse_kinematics(&ee_command, &self.arm.geometry).unwrap_or(self.last_joints);
        self.last_joints = joint_angles;
        let out = ControllerOutput {
            input,
            wrench_demand: input.wrench_demand(),
            ee_command,
            joint_angles,
            cost: solution.cost,
            warm_start_cost: solution.warm_start_cost,
            hover_cost: solution.hover_cost,
            iterations: solution.iterations,
            max_predicted_contact: solution.max_predicted_contact(),
            fallback,
        };
        self.previous = Some(solution);
        Ok(out)
    }
}
