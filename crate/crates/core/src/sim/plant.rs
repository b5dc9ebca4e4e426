//! True vehicle dynamics driven by motor thrusts.

use crate::dynamics::{motor_wrench, normal_contact_force, rk4_step, DynamicsError, MotorThrusts};
use crate::geometry::Vec3;
use crate::params::{ContactSurface, VehicleParams};
use crate::state::{ControlInput, RigidBodyState};

/// Multipliers applied to the controller's parameters to obtain the plant's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    pub mass: f64,
    pub inertia: f64,
    pub spring: f64,
    pub moment_coeff: f64,
}

impl Default for Mismatch {
    fn default() -> Self {
        Self {
            mass: 1.0,
            inertia: 1.0,
            spring: 1.0,
            moment_coeff: 1.0,
        }
    }
}

impl Mismatch {
    pub fn apply(&self, params: &VehicleParams, surface: &ContactSurface) -> (VehicleParams, ContactSurface) {
        let mut p = params.clone();
        p.mass *= self.mass;
        p.inertia_diag *= self.inertia;
        p.thrust_moment_coeff *= self.moment_coeff;
        let mut s = surface.clone();
        s.spring_coeff *= self.spring;
        (p, s)
    }

    /// Robustness presets: mass ±5 %, inertia ±10 %, k_s ±10 %, k_m ±10 %.
    pub fn presets() -> Vec<(&'static str, Mismatch)> {
        let d = Mismatch::default();
        vec![
            ("mass+5%", Mismatch { mass: 1.05, ..d }),
            ("mass-5%", Mismatch { mass: 0.95, ..d }),
            ("inertia+10%", Mismatch { inertia: 1.1, ..d }),
            ("inertia-10%", Mismatch { inertia: 0.9, ..d }),
            ("spring+10%", Mismatch { spring: 1.1, ..d }),
            ("spring-10%", Mismatch { spring: 0.9, ..d }),
            ("moment+10%", Mismatch { moment_coeff: 1.1, ..d }),
            ("moment-10%", Mismatch { moment_coeff: 0.9, ..d }),
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        if [self.mass, self.inertia, self.spring, self.moment_coeff].iter().all(|&m| m > 0.0 && m.is_finite()) {
            Ok(())
        } else {
            Err("mismatch multipliers must be positive".into())
        }
    }
}

/// End-effector response to position commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServoResponse {
    Instantaneous,
    /// First-order lag with the given time constant (s).
    FirstOrder(f64),
}

/// Plant state: rigid body plus the actual end-effector position in A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub body: RigidBodyState,
    pub ee_arm: Vec3,
}

impl PlantState {
    pub fn ee_world(&self, params: &VehicleParams) -> Vec3 {
        self.body.position + self.body.orientation * params.arm_to_body(&self.ee_arm)
    }

    pub fn contact_force(&self, params: &VehicleParams, surface: &ContactSurface) -> f64 {
        normal_contact_force(&self.ee_world(params), surface, &self.body.orientation, params)
    }
}

/// Advances the plant by `dt` in `substeps` RK4 steps with the thrusts and
/// end-effector command held. Returns the new state and its contact force.
#[allow(clippy::too_many_arguments)]
pub fn plant_step(
    state: &PlantState,
    thrusts: &MotorThrusts,
    ee_command: &Vec3,
    servo: ServoResponse,
    params: &VehicleParams,
    surface: &ContactSurface,
    dt: f64,
    substeps: usize,
) -> Result<(PlantState, f64), DynamicsError> {
    let w = motor_wrench(thrusts, params);
    let h = dt / substeps as f64;
    let mut s = *state;
    for _ in 0..substeps {
        s.ee_arm = match servo {
            ServoResponse::Instantaneous => *ee_command,
            ServoResponse::FirstOrder(tau) => s.ee_arm + (ee_command - s.ee_arm) * (1.0 - (-h / tau).exp()),
        };
        let u = ControlInput {
            moment: w.moment,
            thrust: w.force.z,
            ee_position: s.ee_arm,
        };
        s.body = rk4_step(&s.body, &u, h, params, surface)?;
    }
    Ok((s, s.contact_force(params, surface)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitQuat;

    fn far_surface() -> ContactSurface {
        ContactSurface::vertical(Vec3::new(100.0, 0.0, 0.0), std::f64::consts::PI, 42.95, (0.5, 0.5))
    }

    #[test]
    fn hover_is_stationary() {
        let p = VehicleParams::default();
        let s = ContactSurface::default();
        let mut st = PlantState {
            body: RigidBodyState::at_rest(Vec3::new(0.0, 0.0, 1.5), UnitQuat::identity()),
            ee_arm: p.nominal_ee_arm(),
        };
        let f = MotorThrusts::repeat(p.hover_thrust() / 6.0);
        for _ in 0..100 {
            st = plant_step(&st, &f, &p.nominal_ee_arm(), ServoResponse::Instantaneous, &p, &s, 0.01, 10).unwrap().0;
        }
        assert!((st.body.position - Vec3::new(0.0, 0.0, 1.5)).norm() < 1e-9);
        assert!(st.body.velocity.norm() < 1e-9 && st.body.body_rate.norm() < 1e-9);
    }

    #[test]
    fn free_flight_energy() {
        let p = VehicleParams::default();
        let s = far_surface();
        let mut st = PlantState {
            body: RigidBodyState {
                position: Vec3::new(0.0, 0.0, 10.0),
                velocity: Vec3::new(1.0, -0.5, 2.0),
                orientation: UnitQuat::from_euler_angles(0.2, -0.1, 0.5),
                body_rate: Vec3::new(0.5, -0.3, 0.2),
            },
            ee_arm: p.nominal_ee_arm(),
        };
        let energy = |st: &PlantState| {
            let b = &st.body;
            0.5 * p.combined_mass() * b.velocity.norm_squared() + 0.5 * b.body_rate.dot(&(p.inertia() * b.body_rate))
                - p.combined_mass() * p.gravity.dot(&b.position)
        };
        let e0 = energy(&st);
        for _ in 0..100 {
            st = plant_step(&st, &MotorThrusts::zeros(), &p.nominal_ee_arm(), ServoResponse::Instantaneous, &p, &s, 0.01, 10).unwrap().0;
        }
        assert!(((energy(&st) - e0) / e0).abs() < 1e-6);
    }

    #[test]
    fn servo_lag_converges() {
        let p = VehicleParams::default();
        let s = far_surface();
        let st = PlantState {
            body: RigidBodyState::at_rest(Vec3::zeros(), UnitQuat::identity()),
            ee_arm: p.nominal_ee_arm(),
        };
        let cmd = p.nominal_ee_arm() + Vec3::new(0.01, 0.0, 0.0);
        let f = MotorThrusts::repeat(p.hover_thrust() / 6.0);
        let (a, _) = plant_step(&st, &f, &cmd, ServoResponse::FirstOrder(0.03), &p, &s, 0.03, 30).unwrap();
        // One time constant: 1 - e^-1 of the step.
        assert!((a.ee_arm.x - st.ee_arm.x - 0.01 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let (b, _) = plant_step(&st, &f, &cmd, ServoResponse::Instantaneous, &p, &s, 0.01, 10).unwrap();
        assert_eq!(b.ee_arm, cmd);
    }

    #[test]
    fn mismatch_scales_parameters() {
        let p = VehicleParams::default();
        let s = ContactSurface::default();
        let (tp, ts) = Mismatch { spring: 1.1, mass: 0.95, ..Mismatch::default() }.apply(&p, &s);
        assert!((ts.spring_coeff - 1.1 * 42.95).abs() < 1e-12);
        assert!((tp.mass - 0.95 * p.mass).abs() < 1e-12);
        assert_eq!(tp.inertia_diag, p.inertia_diag);
        assert_eq!(Mismatch::presets().len(), 8);
    }
}
