//! Accuracy metrics: registration of the drawn points onto the planned path,
//! nearest-neighbor ("visual") errors and per-axis tracking statistics in T.

pub mod icp;
pub mod stats;
pub mod svg;

use crate::geometry::{transform_point2, Rigid2, Vec2, Vec3};

pub use icp::{fit_rigid, icp_2d, is_collinear, IcpConfig, IcpResult, PointGrid};
pub use stats::{densify, nearest_neighbor_errors, quantile, tracking_stats, tracking_stats_over, BoxStats, NearestNeighborErrors, TrackingStats};
pub use svg::overlay_svg;

/// Spacing of the densified planned path (m).
pub const PATH_SPACING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("reference path is empty")]
    EmptyReference,
    #[error("point set contains non-finite coordinates")]
    NonFinite,
    #[error("points are collinear; rotation is undetermined")]
    Degenerate,
    #[error("log contains no pen-down samples")]
    NoContact,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Drawn points registered onto the planned path and their errors.
#[derive(Debug, Clone)]
pub struct VisualError {
    pub icp: IcpResult,
    pub registered: Vec<Vec2>,
    pub errors: NearestNeighborErrors,
}

/// Planned strokes (T frame) projected onto the writing plane.
pub fn planar_strokes(strokes: &[Vec<Vec3>]) -> Vec<Vec<Vec2>> {
    strokes.iter().map(|s| s.iter().map(|p| p.xy()).collect()).collect()
}

/// Registers `drawn` onto the planned strokes densified at [`PATH_SPACING`]
/// and measures each registered point's distance to the path.
pub fn visual_error(planned: &[Vec<Vec2>], drawn: &[Vec2], config: &IcpConfig) -> Result<VisualError, EvalError> {
    let reference = densify(planned, PATH_SPACING);
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let icp = icp_2d(&reference, drawn, config)?;
    let registered = transform_points(&icp.transform, drawn);
    let errors = nearest_neighbor_errors(&reference, &registered)?;
    Ok(VisualError { icp, registered, errors })
}

/// Applies a planar rigid motion to every point.
pub fn transform_points(t: &Rigid2, points: &[Vec2]) -> Vec<Vec2> {
    points.iter().map(|p| transform_point2(t, p)).collect()
}
