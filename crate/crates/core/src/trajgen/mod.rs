//! Reference generation for writing missions.
//!
//! Text is laid out on the surface as single-stroke glyph polylines (T frame),
//! time-parameterized with a constant-acceleration profile and converted into
//! full MAV references.

pub mod glyphs;
pub mod mission;
pub mod profile;

use crate::geometry::Vec3;

pub use mission::{derive_mav_reference, Mission, MissionSpec};
pub use profile::{time_parameterize, EeSample, VelocityProfile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajgenError {
    #[error("character {0:?} is not in the glyph table")]
    UnsupportedCharacter(char),
    #[error("pen-down point ({x:.3}, {y:.3}) lies outside the writing surface")]
    OutsideSurface { x: f64, y: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Polyline in the contact frame T.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub points: Vec<Vec3>,
    pub pen_down: bool,
}

impl PathSegment {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Text layout parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextLayout {
    /// Cap height (m).
    pub height: f64,
    /// Center of the text block's cap-height box in T (x, y).
    pub center: (f64, f64),
    /// Depth of the writing plane behind the surface (m).
    pub penetration: f64,
    /// Distance in front of the surface for pen-up moves (m).
    pub standoff: f64,
}

impl Default for TextLayout {
    fn default() -> Self {
        Self {
            height: 0.2,
            center: (0.0, 0.0),
            penetration: 0.005,
            standoff: 0.03,
        }
    }
}

/// Pen-down strokes of `text` in T, in drawing order.
pub fn text_strokes(text: &str, layout: &TextLayout) -> Result<Vec<Vec<Vec3>>, TrajgenError> {
    let chars: Vec<char> = text.chars().collect();
    if let Some(&c) = chars.iter().find(|c| !glyphs::is_supported(**c)) {
        return Err(TrajgenError::UnsupportedCharacter(c));
    }
    let h = layout.height;
    let width = if chars.is_empty() { 0.0 } else { (chars.len() as f64 - 1.0) * glyphs::ADVANCE + 0.5 };
    let x0 = layout.center.0 - 0.5 * width * h;
    let y0 = layout.center.1 - 0.5 * h;
    let z = -layout.penetration;
    let mut out = Vec::new();
    for (i, c) in chars.iter().enumerate() {
        let ox = x0 + i as f64 * glyphs::ADVANCE * h;
        for stroke in glyphs::glyph(*c).unwrap_or_default() {
            out.push(stroke.iter().map(|&(x, y)| Vec3::new(ox + x * h, y0 + y * h, z)).collect());
        }
    }
    Ok(out)
}

/// Pen-down strokes joined by pen-up transitions (lift to the standoff plane,
/// traverse, plunge).
pub fn text_to_segments(text: &str, layout: &TextLayout) -> Result<Vec<PathSegment>, TrajgenError> {
    if !(layout.height > 0.0 && layout.standoff > 0.0 && layout.penetration >= 0.0) {
        return Err(TrajgenError::InvalidParameter("height and standoff must be positive, penetration non-negative".into()));
    }
    Ok(strokes_to_segments(&text_strokes(text, layout)?, layout.standoff))
}

/// Explicit pen-down strokes joined by pen-up transitions.
pub fn strokes_to_segments(strokes: &[Vec<Vec3>], standoff: f64) -> Vec<PathSegment> {
    let mut out = Vec::with_capacity(2 * strokes.len());
    for (i, stroke) in strokes.iter().enumerate() {
        if i > 0 {
            let from = *strokes[i - 1].last().unwrap();
            let to = stroke[0];
            out.push(transition(&from, &to, standoff));
        }
        out.push(PathSegment {
            points: stroke.clone(),
            pen_down: true,
        });
    }
    out
}

fn lifted(p: &Vec3, standoff: f64) -> Vec3 {
    Vec3::new(p.x, p.y, standoff)
}

/// Pen-up move between two writing-plane points.
pub fn transition(from: &Vec3, to: &Vec3, standoff: f64) -> PathSegment {
    let mut points = vec![*from, lifted(from, standoff)];
    let top = lifted(to, standoff);
    if (top - points[1]).norm() > 1e-12 {
        points.push(top);
    }
    points.push(*to);
    PathSegment { points, pen_down: false }
}
