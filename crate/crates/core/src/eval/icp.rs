//! Point-to-point ICP on the writing plane.

use std::collections::HashMap;

use nalgebra::{Matrix2, Translation2, UnitComplex};

use crate::eval::EvalError;
use crate::geometry::{transform_point2, Rigid2, Vec2};

/// Uniform hash grid over a fixed point set for exact nearest-neighbor queries.
#[derive(Debug, Clone)]
pub struct PointGrid {
    points: Vec<Vec2>,
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    /// Bounding box of the occupied cells, in cell indices.
    lo: (i64, i64),
    hi: (i64, i64),
}

impl PointGrid {
    /// `points` must be non-empty and finite.
    pub fn new(points: &[Vec2]) -> Self {
        let (mut min, mut max) = (points[0], points[0]);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        let extent = (max - min).amax().max(1e-6);
        // About two points per cell for evenly spread sets.
        let cell = (extent / (points.len() as f64 / 2.0).sqrt().max(1.0)).max(1e-6);
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let key = |p: &Vec2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p)).or_default().push(i);
        }
        let lo = key(&min);
        let hi = key(&max);
        Self {
            points: points.to_vec(),
            cell,
            cells,
            lo,
            hi,
        }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Index of and distance to the nearest stored point.
    pub fn nearest(&self, q: &Vec2) -> (usize, f64) {
        let c = ((q.x / self.cell).floor() as i64, (q.y / self.cell).floor() as i64);
        // Distance from q to the grid's bounding box, in cells, bounds the
        // first ring that can hold a point.
        let gap = |v: i64, lo: i64, hi: i64| if v < lo { lo - v } else if v > hi { v - hi } else { 0 };
        let start = gap(c.0, self.lo.0, self.hi.0).max(gap(c.1, self.lo.1, self.hi.1));
        let max_ring = start + (self.hi.0 - self.lo.0).max(self.hi.1 - self.lo.1) + 1;
        let mut best = (usize::MAX, f64::INFINITY);
        for ring in start..=max_ring {
            // Points in ring `ring` are at least `(ring - 1) * cell` away.
            if best.1 <= (ring - 1) as f64 * self.cell {
                break;
            }
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    if let Some(idx) = self.cells.get(&(c.0 + dx, c.1 + dy)) {
                        for &i in idx {
                            let d = (self.points[i] - q).norm();
                            if d < best.1 || (d == best.1 && i < best.0) {
                                best = (i, d);
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpConfig {
    pub max_iterations: usize,
    /// Stop when the RMS changes by less than this (m).
    pub tolerance: f64,
    /// Fraction of the worst correspondences left out of each fit.
    pub trim_fraction: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-12,
            trim_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcpResult {
    /// Maps data points onto the model.
    pub transform: Rigid2,
    /// Nearest-neighbor RMS distance after applying `transform`.
    pub rms: f64,
    pub iterations: usize,
    /// RMS at the initial guess followed by the RMS after each iteration.
    pub rms_history: Vec<f64>,
}

impl IcpResult {
    pub fn rotation(&self) -> Matrix2<f64> {
        *self.transform.rotation.to_rotation_matrix().matrix()
    }

    pub fn translation(&self) -> Vec2 {
        self.transform.translation.vector
    }
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]`.
pub fn fit_rigid(src: &[Vec2], dst: &[Vec2]) -> Rigid2 {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vec2>() / n;
    let cd = dst.iter().sum::<Vec2>() / n;
    let (mut sin, mut cos) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s - cs, d - cd);
        cos += a.dot(&b);
        sin += a.perp(&b);
    }
    let rot = UnitComplex::new(sin.atan2(cos));
    let t = cd - rot * cs;
    Rigid2::from_parts(Translation2::from(t), rot)
}

fn check_points(p: &[Vec2]) -> Result<(), EvalError> {
    if p.len() < 3 {
        return Err(EvalError::TooFewPoints(p.len()));
    }
    if p.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
        return Err(EvalError::NonFinite);
    }
    Ok(())
}

/// True if all points lie on a line, which leaves the rotation undetermined.
pub fn is_collinear(p: &[Vec2]) -> bool {
    let n = p.len() as f64;
    let c = p.iter().sum::<Vec2>() / n;
    let cov = p.iter().fold(Matrix2::zeros(), |acc, v| acc + (v - c) * (v - c).transpose()) / n;
    let eig = cov.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    hi <= 0.0 || lo <= 1e-12 * hi
}

fn rms_of(d: &[f64]) -> f64 {
    (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt()
}

/// Registers `data` onto `model`, starting from the identity.
pub fn icp_2d(model: &[Vec2], data: &[Vec2], config: &IcpConfig) -> Result<IcpResult, EvalError> {
    check_points(model)?;
    check_points(data)?;
    if is_collinear(data) {
        return Err(EvalError::Degenerate);
    }
    if !(0.0..1.0).contains(&config.trim_fraction) {
        return Err(EvalError::InvalidParameter("trim fraction must lie in [0, 1)".into()));
    }
    let grid = PointGrid::new(model);
    let keep = ((1.0 - config.trim_fraction) * data.len() as f64).ceil().max(3.0) as usize;

    let mut transform = Rigid2::identity();
    let matches = |t: &Rigid2| -> Vec<(usize, usize, f64)> {
        data.iter()
            .enumerate()
            .map(|(i, p)| {
                let (j, d) = grid.nearest(&transform_point2(t, p));
                (i, j, d)
            })
            .collect()
    };
    let mut pairs = matches(&transform);
    let mut rms = rms_of(&pairs.iter().map(|m| m.2).collect::<Vec<_>>());
    let mut history = vec![rms];
    let mut iterations = 0;
    while iterations < config.max_iterations && rms > 0.0 {
        let mut used = pairs.clone();
        if keep < used.len() {
            used.sort_by(|a, b| a.2.total_cmp(&b.2));
            used.truncate(keep);
        }
        let src: Vec<Vec2> = used.iter().map(|m| transform_point2(&transform, &data[m.0])).collect();
        let dst: Vec<Vec2> = used.iter().map(|m| model[m.1]).collect();
        let step = fit_rigid(&src, &dst);
        let candidate = step * transform;
        let next = matches(&candidate);
        let next_rms = rms_of(&next.iter().map(|m| m.2).collect::<Vec<_>>());
        iterations += 1;
        // A fit on fixed pairs cannot raise their error and re-matching can only
        // lower it further, so a rise is round-off; keep the better estimate.
        if next_rms > rms {
            break;
        }
        let change = rms - next_rms;
        transform = candidate;
        pairs = next;
        rms = next_rms;
        history.push(rms);
        if change < config.tolerance {
            break;
        }
    }
    Ok(IcpResult {
        transform,
        rms,
        iterations,
        rms_history: history,
    })
}
