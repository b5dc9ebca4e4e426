//! Pose estimate and force sensor models.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{exp_rotvec, Vec3};
use crate::state::RigidBodyState;

/// Standard deviations of additive Gaussian noise and the pose delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Position noise (m).
    pub position: f64,
    /// Attitude noise per axis (rad).
    pub attitude: f64,
    /// Linear velocity noise (m/s).
    pub velocity: f64,
    /// Body rate noise (rad/s).
    pub body_rate: f64,
    /// Force sensor noise (N).
    pub force: f64,
    /// Pose delay in control ticks.
    pub delay_ticks: usize,
}

impl SensorConfig {
    pub fn ideal() -> Self {
        Self {
            position: 0.0,
            attitude: 0.0,
            velocity: 0.0,
            body_rate: 0.0,
            force: 0.0,
            delay_ticks: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let s = [self.position, self.attitude, self.velocity, self.body_rate, self.force];
        if s.iter().all(|&v| v >= 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err("sensor noise standard deviations must be non-negative".into())
        }
    }
}

impl Default for SensorConfig {
    /// Motion-capture-like figures.
    fn default() -> Self {
        Self {
            position: 0.5e-3,
            attitude: 0.1f64.to_radians(),
            velocity: 5e-3,
            body_rate: 5e-3,
            force: 0.01,
            delay_ticks: 1,
        }
    }
}

/// Noisy, delayed observation of the true state.
#[derive(Debug, Clone)]
pub struct Sensor {
    config: SensorConfig,
    rng: ChaCha8Rng,
    history: VecDeque<RigidBodyState>,
}

fn sample(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0)
}

fn sample3(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    Vec3::new(sample(rng, sigma), sample(rng, sigma), sample(rng, sigma))
}

impl Sensor {
    /// The delay line is pre-filled with `initial`.
    pub fn new(config: SensorConfig, seed: u64, initial: &RigidBodyState) -> Self {
        Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: std::iter::repeat(*initial).take(config.delay_ticks + 1).collect(),
        }
    }

    /// Records the current truth and returns the estimate and force measurement.
    pub fn sense(&mut self, truth: &RigidBodyState, force: f64) -> (RigidBodyState, f64) {
        self.history.push_back(*truth);
        while self.history.len() > self.config.delay_ticks + 1 {
            self.history.pop_front();
        }
        let x = self.history[0];
        let c = self.config;
        let rng = &mut self.rng;
        let est = RigidBodyState {
            position: x.position + sample3(rng, c.position),
            velocity: x.velocity + sample3(rng, c.velocity),
            orientation: x.orientation * exp_rotvec(&sample3(rng, c.attitude)),
            body_rate: x.body_rate + sample3(rng, c.body_rate),
        };
        (est, force + sample(rng, c.force))
    }
}
