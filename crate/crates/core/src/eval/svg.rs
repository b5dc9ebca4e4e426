//! SVG overlay of the planned path and the drawn points (1 user unit = 1 mm).

use std::fmt::Write;

use crate::geometry::Vec2;

/// Error at which the point color saturates to red (m).
pub const COLOR_SCALE: f64 = 10e-3;

fn color(error: f64) -> String {
    let t = (error / COLOR_SCALE).clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let g = (160.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}{g:02x}40")
}

/// Renders planned strokes and drawn points (T frame, meters) with the points
/// colored by their error. The SVG y axis points down, so y is flipped.
pub fn overlay_svg(planned: &[Vec<Vec2>], drawn: &[Vec2], errors: &[f64]) -> String {
    let mm = |p: &Vec2| (p.x * 1e3, -p.y * 1e3);
    let all = planned.iter().flatten().chain(drawn.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in all {
        let (x, y) = mm(p);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let margin = 10.0;
    let (w, h) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}mm" height="{h:.1}mm" viewBox="{:.3} {:.3} {w:.3} {h:.3}">"#,
        x0 - margin,
        y0 - margin
    );
    s.push_str("<g id=\"planned\" fill=\"none\" stroke=\"#3060c0\" stroke-width=\"0.5\" stroke-linecap=\"round\">\n");
    for stroke in planned {
        let pts: Vec<String> = stroke
            .iter()
            .map(|p| {
                let (x, y) = mm(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}"/>"#, pts.join(" "));
    }
    s.push_str("</g>\n<g id=\"drawn\" stroke=\"none\">\n");
    for (i, p) in drawn.iter().enumerate() {
        let (x, y) = mm(p);
        let e = errors.get(i).copied().unwrap_or(0.0);
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="0.3" fill="{}"/>"#, color(e));
    }
    s.push_str("</g>\n</svg>\n");
    s
}
