//! Closed-loop simulation: sensing, control, allocation and the true plant at
//! the control rate.

pub mod log;
pub mod plant;
pub mod sensor;

use std::time::Instant;

use crate::allocation::{solve_allocation, AllocationConfig};
use crate::delta::DeltaArm;
use crate::dynamics::AllocationMatrix;
use crate::nmpc::{Controller, GainSet, OcpConfig, ReferenceSource, SlqSolver};
use crate::params::{ContactSurface, VehicleParams};
use crate::trajgen::Mission;

pub use log::{LogRecord, MissionLog, RunFailure, LOG_SCHEMA_VERSION};
pub use plant::{plant_step, Mismatch, PlantState, ServoResponse};
pub use sensor::{Sensor, SensorConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub mismatch: Mismatch,
    pub servo: ServoResponse,
    pub sensors: SensorConfig,
    pub seed: u64,
    /// RK4 substeps per control tick.
    pub substeps: usize,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            mismatch: Mismatch::default(),
            servo: ServoResponse::Instantaneous,
            sensors: SensorConfig::default(),
            seed: 0,
            substeps: 10,
        }
    }
}

impl PlantConfig {
    /// Plant identical to the model with perfect, undelayed sensing.
    pub fn ideal() -> Self {
        Self {
            sensors: SensorConfig::ideal(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.mismatch.validate()?;
        self.sensors.validate()?;
        if self.substeps == 0 {
            return Err("at least one plant substep is required".into());
        }
        if let ServoResponse::FirstOrder(tau) = self.servo {
            if !(tau > 0.0) {
                return Err("servo time constant must be positive".into());
            }
        }
        Ok(())
    }
}

/// Everything needed to run a mission in closed loop. `params` and `surface`
/// are the controller's model; the plant applies `plant.mismatch` to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopConfig {
    pub ocp: OcpConfig,
    pub gains: GainSet,
    pub params: VehicleParams,
    pub surface: ContactSurface,
    pub arm: DeltaArm,
    pub allocation: AllocationConfig,
    pub plant: PlantConfig,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        let params = VehicleParams::default();
        Self {
            ocp: OcpConfig::default(),
            gains: GainSet::default(),
            allocation: AllocationConfig::from_params(&params),
            params,
            surface: ContactSurface::default(),
            arm: DeltaArm::default(),
            plant: PlantConfig::default(),
        }
    }
}

impl ClosedLoopConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.ocp.validate()?;
        self.gains.validate()?;
        self.params.validate()?;
        self.surface.validate()?;
        self.arm.validate()?;
        self.allocation.validate()?;
        self.plant.validate()
    }
}

/// Log of a run plus wall-clock controller cycle times (ms), which are kept
/// out of the log so that logs stay reproducible.
#[derive(Debug, Clone)]
pub struct ClosedLoopRun {
    pub log: MissionLog,
    pub cycle_ms: Vec<f64>,
}

/// Runs `mission` tick by tick: sense, solve, allocate, integrate the plant.
/// A failure stops the run and is recorded in the returned log.
pub fn run_closed_loop(mission: &Mission, cfg: &ClosedLoopConfig) -> ClosedLoopRun {
    let dt = cfg.ocp.step;
    let ticks = (mission.duration() / dt).round() as usize + 1;
    let (true_params, true_surface) = cfg.plant.mismatch.apply(&cfg.params, &cfg.surface);
    let solver = SlqSolver::new(cfg.ocp, cfg.gains, cfg.params.clone(), cfg.surface.clone());
    let mut controller = Controller::new(solver, cfg.arm);
    let mut log = MissionLog::default();
    let mut cycle_ms = Vec::with_capacity(ticks);
    let alloc = match AllocationMatrix::build(&cfg.params) {
        Ok(a) => a,
        Err(e) => {
            log.failure = Some(RunFailure { tick: 0, reason: e.to_string() });
            return ClosedLoopRun { log, cycle_ms };
        }
    };

    let initial = mission.initial_state();
    let mut state = PlantState {
        body: initial,
        ee_arm: cfg.arm.nominal,
    };
    let mut sensor = Sensor::new(cfg.plant.sensors, cfg.plant.seed, &initial);
    let mut f_true = state.contact_force(&true_params, &true_surface);

    for k in 0..ticks {
        let t = k as f64 * dt;
        let (x_hat, f_meas) = sensor.sense(&state.body, f_true);
        let start = Instant::now();
        let out = match controller.cycle(&x_hat, t, mission) {
            Ok(o) => o,
            Err(e) => {
                log.failure = Some(RunFailure { tick: k, reason: e.to_string() });
                break;
            }
        };
        let thrusts = solve_allocation(&out.wrench_demand, &alloc, &cfg.allocation);
        cycle_ms.push(start.elapsed().as_secs_f64() * 1e3);

        let r = mission.sample(t);
        let b = &state.body;
        let ee = state.ee_world(&true_params);
        log.records.push(LogRecord {
            time: t,
            stage: r.stage,
            pen_down: r.pen_down,
            px: b.position.x,
            py: b.position.y,
            pz: b.position.z,
            vx: b.velocity.x,
            vy: b.velocity.y,
            vz: b.velocity.z,
            qx: b.orientation.i,
            qy: b.orientation.j,
            qz: b.orientation.k,
            qw: b.orientation.w,
            wx: b.body_rate.x,
            wy: b.body_rate.y,
            wz: b.body_rate.z,
            est_px: x_hat.position.x,
            est_py: x_hat.position.y,
            est_pz: x_hat.position.z,
            est_qx: x_hat.orientation.i,
            est_qy: x_hat.orientation.j,
            est_qz: x_hat.orientation.k,
            est_qw: x_hat.orientation.w,
            ref_px: r.mav_position.x,
            ref_py: r.mav_position.y,
            ref_pz: r.mav_position.z,
            ref_ex: r.ee_position.x,
            ref_ey: r.ee_position.y,
            ref_ez: r.ee_position.z,
            ref_fc: r.contact_force,
            mx: out.input.moment.x,
            my: out.input.moment.y,
            mz: out.input.moment.z,
            thrust: out.input.thrust,
            u_ex: out.input.ee_position.x,
            u_ey: out.input.ee_position.y,
            u_ez: out.input.ee_position.z,
            cmd_ex: out.ee_command.x,
            cmd_ey: out.ee_command.y,
            cmd_ez: out.ee_command.z,
            ee_x: ee.x,
            ee_y: ee.y,
            ee_z: ee.z,
            f1: thrusts[0],
            f2: thrusts[1],
            f3: thrusts[2],
            f4: thrusts[3],
            f5: thrusts[4],
            f6: thrusts[5],
            fc_true: f_true,
            fc_meas: f_meas,
            cost: out.cost,
            warm_cost: out.warm_start_cost,
            hover_cost: out.hover_cost,
            iterations: out.iterations,
            horizon_fc_max: out.max_predicted_contact,
            fallback: out.fallback,
        });

        match plant_step(&state, &thrusts, &out.ee_command, cfg.plant.servo, &true_params, &true_surface, dt, cfg.plant.substeps) {
            Ok((s, f)) => {
                state = s;
                f_true = f;
            }
            Err(e) => {
                log.failure = Some(RunFailure {
                    tick: k,
                    reason: format!("plant: {e}"),
                });
                break;
            }
        }
    }
    ClosedLoopRun { log, cycle_ms }
}
