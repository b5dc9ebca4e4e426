//! Error statistics: nearest-neighbor distances and box-plot summaries.

use crate::eval::icp::PointGrid;
use crate::eval::EvalError;
use crate::geometry::{Vec2, Vec3};
use crate::params::ContactSurface;
use crate::sim::{LogRecord, MissionLog};

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Box-plot statistics with Tukey whiskers (1.5 IQR, clipped to the data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub whisker_lo: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_hi: f64,
    pub max: f64,
}

impl BoxStats {
    /// `None` for an empty sample.
    pub fn from_samples(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let whisker_lo = v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(q1).min(q1);
        let whisker_hi = v.iter().rev().copied().find(|&x| x <= hi_fence).unwrap_or(q3).max(q3);
        Some(Self {
            min: v[0],
            whisker_lo,
            q1,
            median,
            q3,
            whisker_hi,
            max: v[v.len() - 1],
        })
    }

    /// Largest absolute value in the sample.
    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

/// Per-axis (T frame x, y, z) box statistics of MAV and end-effector position
/// errors (actual minus reference) over the pen-down ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingStats {
    pub mav: [BoxStats; 3],
    pub ee: [BoxStats; 3],
    pub samples: usize,
}

pub fn tracking_stats(log: &MissionLog, surface: &ContactSurface) -> Result<TrackingStats, EvalError> {
    tracking_stats_over(log, surface, |r| r.pen_down).ok_or(EvalError::NoContact)
}

/// Per-axis T-frame errors over the records selected by `keep`; `None` when
/// no record is selected.
pub fn tracking_stats_over(log: &MissionLog, surface: &ContactSurface, keep: impl Fn(&LogRecord) -> bool) -> Option<TrackingStats> {
    let r_tw = surface.t_wt.rotation.inverse();
    let mut mav: [Vec<f64>; 3] = Default::default();
    let mut ee: [Vec<f64>; 3] = Default::default();
    for r in log.records.iter().filter(|r| keep(r)) {
        let em: Vec3 = r_tw * (r.mav_position() - r.ref_mav_position());
        let ep: Vec3 = r_tw * (r.ee_position() - r.ref_ee_position());
        for k in 0..3 {
            mav[k].push(em[k]);
            ee[k].push(ep[k]);
        }
    }
    let samples = mav[0].len();
    if samples == 0 {
        return None;
    }
    let boxed = |v: &[Vec<f64>; 3]| [0, 1, 2].map(|k| BoxStats::from_samples(&v[k]).expect("non-empty"));
    Some(TrackingStats {
        mav: boxed(&mav),
        ee: boxed(&ee),
        samples,
    })
}

/// Distances from drawn points to the nearest reference sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestNeighborErrors {
    pub distances: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub rms: f64,
    pub p50: f64,
    pub p95: f64,
}

pub fn nearest_neighbor_errors(reference: &[Vec2], drawn: &[Vec2]) -> Result<NearestNeighborErrors, EvalError> {
    if drawn.is_empty() {
        return Err(EvalError::TooFewPoints(0));
    }
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let grid = PointGrid::new(reference);
    let distances: Vec<f64> = drawn.iter().map(|p| grid.nearest(p).1).collect();
    let n = distances.len() as f64;
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(NearestNeighborErrors {
        max: sorted[sorted.len() - 1],
        mean: distances.iter().sum::<f64>() / n,
        rms: (distances.iter().map(|d| d * d).sum::<f64>() / n).sqrt(),
        p50: quantile(&sorted, 0.5),
        p95: quantile(&sorted, 0.95),
        distances,
    })
}

/// Resamples polylines so that consecutive samples are at most `spacing` apart.
/// Every vertex is kept.
pub fn densify(strokes: &[Vec<Vec2>], spacing: f64) -> Vec<Vec2> {
    let mut out = Vec::new();
    for s in strokes {
        let Some(first) = s.first() else { continue };
        out.push(*first);
        for w in s.windows(2) {
            let d = w[1] - w[0];
            let n = (d.norm() / spacing).ceil().max(1.0) as usize;
            out.extend((1..=n).map(|k| w[0] + d * (k as f64 / n as f64)));
        }
    }
    out
}
