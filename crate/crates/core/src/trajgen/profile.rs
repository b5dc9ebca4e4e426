//! Constant-acceleration time parameterization of polylines.

use crate::geometry::Vec3;
use crate::state::Stage;
use crate::trajgen::{PathSegment, TrajgenError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityProfile {
    pub v_max: f64,
    pub a_max: f64,
}

impl VelocityProfile {
    pub fn new(v_max: f64, a_max: f64) -> Result<Self, TrajgenError> {
        let p = Self { v_max, a_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TrajgenError> {
        if self.v_max > 0.0 && self.a_max > 0.0 && self.v_max.is_finite() && self.a_max.is_finite() {
            Ok(())
        } else {
            Err(TrajgenError::InvalidParameter("v_max and a_max must be positive".into()))
        }
    }

    /// The five `(v_max, a_max)` pairs of the velocity sweep.
    pub fn sweep() -> Vec<Self> {
        [0.075, 0.125, 0.175, 0.225, 0.275].iter().map(|&v| Self { v_max: v, a_max: 0.5 * v }).collect()
    }
}

impl Default for VelocityProfile {
    fn default() -> Self {
        Self { v_max: 0.075, a_max: 0.025 }
    }
}

/// Rest-to-rest speed profile along a straight line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub length: f64,
    pub accel: f64,
    pub peak_speed: f64,
    pub ramp_time: f64,
    pub cruise_time: f64,
}

impl Trapezoid {
    pub fn new(length: f64, profile: &VelocityProfile) -> Self {
        let a = profile.a_max;
        let v = profile.v_max;
        if length * a >= v * v {
            Self {
                length,
                accel: a,
                peak_speed: v,
                ramp_time: v / a,
                cruise_time: (length - v * v / a) / v,
            }
        } else {
            let t = (length / a).sqrt();
            Self {
                length,
                accel: a,
                peak_speed: a * t,
                ramp_time: t,
                cruise_time: 0.0,
            }
        }
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.ramp_time + self.cruise_time
    }

    /// Distance travelled and speed at time `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let (ta, tc, a, v) = (self.ramp_time, self.cruise_time, self.accel, self.peak_speed);
        let t = t.clamp(0.0, self.duration());
        if t <= ta {
            (0.5 * a * t * t, a * t)
        } else if t <= ta + tc {
            (0.5 * a * ta * ta + v * (t - ta), v)
        } else {
            let r = self.duration() - t;
            (self.length - 0.5 * a * r * r, a * r)
        }
    }
}

/// End-effector reference sample in T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeSample {
    pub time: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub pen_down: bool,
    /// Index of the source segment.
    pub segment: usize,
    pub stage: Stage,
}

struct Piece {
    start: Vec3,
    dir: Vec3,
    profile: Trapezoid,
    t0: f64,
    segment: usize,
    pen_down: bool,
}

/// Samples `segments` at `rate` Hz, coming to rest at every polyline vertex.
pub fn time_parameterize(segments: &[PathSegment], profile: &VelocityProfile, rate: f64) -> Result<Vec<EeSample>, TrajgenError> {
    profile.validate()?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(TrajgenError::InvalidParameter("sample rate must be positive".into()));
    }
    let mut pieces = Vec::new();
    let mut t = 0.0;
    for (i, seg) in segments.iter().enumerate() {
        for w in seg.points.windows(2) {
            let d = w[1] - w[0];
            let len = d.norm();
            if len < 1e-12 {
                continue;
            }
            let tr = Trapezoid::new(len, profile);
            pieces.push(Piece {
                start: w[0],
                dir: d / len,
                profile: tr,
                t0: t,
                segment: i,
                pen_down: seg.pen_down,
            });
            t += tr.duration();
        }
    }
    let total = t;
    let Some(last) = pieces.last() else {
        return Ok(segments
            .iter()
            .enumerate()
            .find(|(_, s)| !s.points.is_empty())
            .map(|(i, s)| EeSample {
                time: 0.0,
                position: s.points[0],
                velocity: Vec3::zeros(),
                pen_down: s.pen_down,
                segment: i,
                stage: Stage::Write,
            })
            .into_iter()
            .collect());
    };
    let end = last.start + last.dir * last.profile.length;

    let n = (total * rate - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut j = 0;
    for k in 0..=n {
        let time = k as f64 / rate;
        while j + 1 < pieces.len() && pieces[j + 1].t0 <= time {
            j += 1;
        }
        let p = &pieces[j];
        let (position, velocity) = if k == n {
            (end, Vec3::zeros())
        } else {
            let (s, v) = p.profile.eval(time - p.t0);
            (p.start + p.dir * s, p.dir * v)
        };
        out.push(EeSample {
            time,
            position,
            velocity,
            pen_down: p.pen_down,
            segment: p.segment,
            stage: Stage::Write,
        });
    }
    Ok(out)
}
