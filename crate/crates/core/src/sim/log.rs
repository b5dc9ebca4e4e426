//! Per-tick mission log and its CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{quat_from_xyzw, Vec2, Vec3};
use crate::params::ContactSurface;
use crate::state::{RigidBodyState, Stage};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One control tick. States are sampled at the start of the tick; the motor
/// thrusts and end-effector command are held during it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub time: f64,
    pub stage: Stage,
    pub pen_down: bool,
    // True MAV state.
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub qw: f64,
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
    // Estimated pose.
    pub est_px: f64,
    pub est_py: f64,
    pub est_pz: f64,
    pub est_qx: f64,
    pub est_qy: f64,
    pub est_qz: f64,
    pub est_qw: f64,
    // References (W).
    pub ref_px: f64,
    pub ref_py: f64,
    pub ref_pz: f64,
    pub ref_ex: f64,
    pub ref_ey: f64,
    pub ref_ez: f64,
    pub ref_fc: f64,
    // First optimal input.
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub thrust: f64,
    pub u_ex: f64,
    pub u_ey: f64,
    pub u_ez: f64,
    // Projected end-effector command (A) and true end-effector position (W).
    pub cmd_ex: f64,
    pub cmd_ey: f64,
    pub cmd_ez: f64,
    pub ee_x: f64,
    pub ee_y: f64,
    pub ee_z: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    pub f6: f64,
    pub fc_true: f64,
    pub fc_meas: f64,
    pub cost: f64,
    pub warm_cost: Option<f64>,
    pub hover_cost: f64,
    pub iterations: usize,
    pub horizon_fc_max: f64,
    pub fallback: bool,
}

impl LogRecord {
    pub fn true_state(&self) -> RigidBodyState {
        RigidBodyState {
            position: Vec3::new(self.px, self.py, self.pz),
            velocity: Vec3::new(self.vx, self.vy, self.vz),
            orientation: quat_from_xyzw(self.qx, self.qy, self.qz, self.qw),
            body_rate: Vec3::new(self.wx, self.wy, self.wz),
        }
    }

    pub fn mav_position(&self) -> Vec3 {
        Vec3::new(self.px, self.py, self.pz)
    }

    pub fn ref_mav_position(&self) -> Vec3 {
        Vec3::new(self.ref_px, self.ref_py, self.ref_pz)
    }

    pub fn ee_position(&self) -> Vec3 {
        Vec3::new(self.ee_x, self.ee_y, self.ee_z)
    }

    pub fn ref_ee_position(&self) -> Vec3 {
        Vec3::new(self.ref_ex, self.ref_ey, self.ref_ez)
    }

    pub fn thrusts(&self) -> [f64; 6] {
        [self.f1, self.f2, self.f3, self.f4, self.f5, self.f6]
    }
}

/// Failure that ended a run early.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub tick: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MissionLog {
    pub records: Vec<LogRecord>,
    pub failure: Option<RunFailure>,
}

impl MissionLog {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// True end-effector positions in T (x, y) on ticks with contact.
    pub fn drawn_points(&self, surface: &ContactSurface) -> Vec<Vec2> {
        self.records
            .iter()
            .filter(|r| r.fc_true > 0.0)
            .map(|r| surface.to_surface(&r.ee_position()).xy())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), LogError> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, LogError> {
        let mut rd = csv::Reader::from_reader(r);
        let records = rd.deserialize().collect::<Result<Vec<LogRecord>, _>>()?;
        Ok(Self { records, failure: None })
    }
}
