//! Single-stroke vector font.
//!
//! Coordinates are in units of the cap height with the baseline at `y = 0`;
//! lowercase letters use an x-height of 0.6 and descenders reach `y = -0.3`.
//! Every glyph fits in `0 <= x <= 0.5`.

/// Polyline in glyph units.
pub type Stroke = Vec<(f64, f64)>;

/// Horizontal distance between consecutive glyph origins.
pub const ADVANCE: f64 = 0.7;

/// Points on an ellipse from `a0` to `a1` degrees (counter-clockwise if `a1 > a0`).
fn arc(cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64, n: usize) -> Stroke {
    (0..=n)
        .map(|i| {
            let a = (a0 + (a1 - a0) * i as f64 / n as f64).to_radians();
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

fn line(points: &[(f64, f64)]) -> Stroke {
    points.to_vec()
}

/// Concatenates pieces into one stroke.
fn chain(pieces: Vec<Stroke>) -> Stroke {
    pieces.into_iter().flatten().collect()
}

fn dot(x: f64, y: f64) -> Stroke {
    vec![(x, y), (x, y + 0.05)]
}

fn scaled(strokes: Vec<Stroke>, s: f64, dx: f64, dy: f64) -> Vec<Stroke> {
    strokes
        .into_iter()
        .map(|st| st.into_iter().map(|(x, y)| (dx + s * x, dy + s * y)).collect())
        .collect()
}

/// Drops consecutive duplicates left over from joining pieces.
fn dedup(stroke: Stroke) -> Stroke {
    let mut out: Stroke = Vec::with_capacity(stroke.len());
    for p in stroke {
        match out.last() {
            Some(q) if (p.0 - q.0).hypot(p.1 - q.1) < 1e-9 => {}
            _ => out.push(p),
        }
    }
    out
}

fn raw_glyph(c: char) -> Option<Vec<Stroke>> {
    let upper_bowl = |x0: f64| arc(x0, 0.75, 0.2, 0.25, 90.0, -90.0, 4);
    let s = vec![chain(vec![arc(0.25, 0.75, 0.22, 0.25, 20.0, 270.0, 5), arc(0.25, 0.25, 0.25, 0.25, 90.0, -160.0, 5)])];
    let two = vec![chain(vec![arc(0.25, 0.75, 0.25, 0.25, 160.0, -30.0, 5), line(&[(0.0, 0.0), (0.5, 0.0)])])];
    let lower_bowl = || arc(0.25, 0.3, 0.25, 0.3, 0.0, 360.0, 8);
    let g = match c {
        ' ' => vec![],
        'A' => vec![line(&[(0.0, 0.0), (0.25, 1.0), (0.5, 0.0)]), line(&[(0.1, 0.4), (0.4, 0.4)])],
        'B' => vec![
            line(&[(0.0, 0.0), (0.0, 1.0)]),
            chain(vec![
                line(&[(0.0, 1.0), (0.28, 1.0)]),
                upper_bowl(0.28),
                line(&[(0.0, 0.5), (0.28, 0.5)]),
                arc(0.28, 0.25, 0.22, 0.25, 90.0, -90.0, 4),
                line(&[(0.0, 0.0)]),
            ]),
        ],
        'C' => vec![arc(0.28, 0.5, 0.28, 0.5, 60.0, 300.0, 8)],
        'D' => vec![chain(vec![line(&[(0.0, 0.0), (0.0, 1.0), (0.2, 1.0)]), arc(0.2, 0.5, 0.3, 0.5, 90.0, -90.0, 6), line(&[(0.0, 0.0)])])],
        'E' => vec![
            line(&[(0.0, 0.0), (0.0, 1.0)]),
            line(&[(0.0, 1.0), (0.45, 1.0)]),
            line(&[(0.0, 0.5), (0.35, 0.5)]),
            line(&[(0.0, 0.0), (0.45, 0.0)]),
        ],
        'F' => vec![line(&[(0.0, 0.0), (0.0, 1.0)]), line(&[(0.0, 1.0), (0.45, 1.0)]), line(&[(0.0, 0.5), (0.35, 0.5)])],
        'G' => vec![chain(vec![arc(0.25, 0.5, 0.25, 0.5, 60.0, 360.0, 9), line(&[(0.3, 0.5)])])],
        'H' => vec![line(&[(0.0, 0.0), (0.0, 1.0)]), line(&[(0.5, 0.0), (0.5, 1.0)]), line(&[(0.0, 0.5), (0.5, 0.5)])],
        'I' => vec![line(&[(0.25, 0.0), (0.25, 1.0)])],
        'J' => vec![chain(vec![line(&[(0.45, 1.0)]), arc(0.25, 0.25, 0.2, 0.25, 0.0, -180.0, 4)])],
        'K' => vec![line(&[(0.0, 0.0), (0.0, 1.0)]), line(&[(0.45, 1.0), (0.0, 0.5), (0.45, 0.0)])],
        'L' => vec![line(&[(0.0, 1.0), (0.0, 0.0), (0.45, 0.0)])],
        'M' => vec![line(&[(0.0, 0.0), (0.0, 1.0), (0.25, 0.4), (0.5, 1.0), (0.5, 0.0)])],
        'N' => vec![line(&[(0.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 1.0)])],
        'O' | '0' => vec![arc(0.25, 0.5, 0.25, 0.5, 90.0, 450.0, 12)],
        'P' => vec![chain(vec![line(&[(0.0, 0.0), (0.0, 1.0), (0.28, 1.0)]), upper_bowl(0.28), line(&[(0.0, 0.5)])])],
        'Q' => vec![arc(0.25, 0.5, 0.25, 0.5, 90.0, 450.0, 12), line(&[(0.3, 0.2), (0.5, 0.0)])],
        'R' => vec![
            line(&[(0.0, 0.0), (0.0, 1.0)]),
            chain(vec![line(&[(0.0, 1.0), (0.28, 1.0)]), upper_bowl(0.28), line(&[(0.0, 0.5), (0.45, 0.0)])]),
        ],
        'S' => s.clone(),
        'T' => vec![line(&[(0.0, 1.0), (0.5, 1.0)]), line(&[(0.25, 1.0), (0.25, 0.0)])],
        'U' => vec![chain(vec![line(&[(0.0, 1.0)]), arc(0.25, 0.3, 0.25, 0.3, 180.0, 360.0, 6), line(&[(0.5, 1.0)])])],
        'V' => vec![line(&[(0.0, 1.0), (0.25, 0.0), (0.5, 1.0)])],
        'W' => vec![line(&[(0.0, 1.0), (0.12, 0.0), (0.25, 0.7), (0.38, 0.0), (0.5, 1.0)])],
        'X' => vec![line(&[(0.0, 1.0), (0.5, 0.0)]), line(&[(0.0, 0.0), (0.5, 1.0)])],
        'Y' => vec![line(&[(0.0, 1.0), (0.25, 0.5), (0.5, 1.0)]), line(&[(0.25, 0.5), (0.25, 0.0)])],
        'Z' => vec![line(&[(0.0, 1.0), (0.5, 1.0), (0.0, 0.0), (0.5, 0.0)])],

        'a' => vec![lower_bowl(), line(&[(0.5, 0.6), (0.5, 0.0)])],
        'b' => vec![line(&[(0.0, 1.0), (0.0, 0.0)]), arc(0.25, 0.3, 0.25, 0.3, 180.0, 540.0, 8)],
        'c' => vec![arc(0.25, 0.3, 0.25, 0.3, 45.0, 315.0, 6)],
        'd' => vec![arc(0.25, 0.3, 0.25, 0.3, 0.0, 360.0, 8), line(&[(0.5, 1.0), (0.5, 0.0)])],
        'e' => vec![chain(vec![line(&[(0.0, 0.3)]), arc(0.25, 0.3, 0.25, 0.3, 0.0, 315.0, 7)])],
        'f' => vec![chain(vec![arc(0.35, 0.85, 0.15, 0.15, 30.0, 180.0, 3), line(&[(0.2, 0.0)])]), line(&[(0.05, 0.6), (0.4, 0.6)])],
        'g' => vec![lower_bowl(), chain(vec![line(&[(0.5, 0.6)]), arc(0.25, -0.1, 0.25, 0.2, 0.0, -180.0, 4)])],
        'h' => vec![line(&[(0.0, 1.0), (0.0, 0.0)]), chain(vec![arc(0.25, 0.35, 0.25, 0.25, 180.0, 0.0, 4), line(&[(0.5, 0.0)])])],
        'i' => vec![line(&[(0.25, 0.6), (0.25, 0.0)]), dot(0.25, 0.8)],
        'j' => vec![chain(vec![line(&[(0.35, 0.6)]), arc(0.2, -0.1, 0.15, 0.2, 0.0, -180.0, 3)]), dot(0.35, 0.8)],
        'k' => vec![line(&[(0.0, 1.0), (0.0, 0.0)]), line(&[(0.4, 0.6), (0.0, 0.25), (0.4, 0.0)])],
        'l' => vec![line(&[(0.25, 1.0), (0.25, 0.0)])],
        'm' => vec![
            line(&[(0.0, 0.6), (0.0, 0.0)]),
            chain(vec![
                arc(0.125, 0.4, 0.125, 0.2, 180.0, 0.0, 3),
                line(&[(0.25, 0.0), (0.25, 0.4)]),
                arc(0.375, 0.4, 0.125, 0.2, 180.0, 0.0, 3),
                line(&[(0.5, 0.0)]),
            ]),
        ],
        'n' => vec![line(&[(0.0, 0.6), (0.0, 0.0)]), chain(vec![arc(0.25, 0.35, 0.25, 0.25, 180.0, 0.0, 4), line(&[(0.5, 0.0)])])],
        'o' => vec![arc(0.25, 0.3, 0.25, 0.3, 90.0, 450.0, 10)],
        'p' => vec![line(&[(0.0, 0.6), (0.0, -0.3)]), arc(0.25, 0.3, 0.25, 0.3, 180.0, 540.0, 8)],
        'q' => vec![lower_bowl(), line(&[(0.5, 0.6), (0.5, -0.3)])],
        'r' => vec![line(&[(0.0, 0.6), (0.0, 0.0)]), arc(0.25, 0.35, 0.25, 0.25, 180.0, 60.0, 3)],
        's' => scaled(s.clone(), 0.6, 0.05, 0.0),
        't' => vec![line(&[(0.2, 0.9), (0.2, 0.0), (0.4, 0.0)]), line(&[(0.05, 0.6), (0.4, 0.6)])],
        'u' => vec![chain(vec![line(&[(0.0, 0.6)]), arc(0.25, 0.25, 0.25, 0.25, 180.0, 360.0, 4), line(&[(0.5, 0.6), (0.5, 0.0)])])],
        'v' => vec![line(&[(0.0, 0.6), (0.25, 0.0), (0.5, 0.6)])],
        'w' => vec![line(&[(0.0, 0.6), (0.125, 0.0), (0.25, 0.45), (0.375, 0.0), (0.5, 0.6)])],
        'x' => vec![line(&[(0.0, 0.6), (0.5, 0.0)]), line(&[(0.0, 0.0), (0.5, 0.6)])],
        'y' => vec![line(&[(0.0, 0.6), (0.25, 0.0)]), line(&[(0.5, 0.6), (0.1, -0.3)])],
        'z' => vec![line(&[(0.0, 0.6), (0.5, 0.6), (0.0, 0.0), (0.5, 0.0)])],

        '1' => vec![line(&[(0.1, 0.8), (0.25, 1.0), (0.25, 0.0)])],
        '2' => two.clone(),
        '3' => vec![chain(vec![arc(0.25, 0.75, 0.22, 0.25, 150.0, -90.0, 5), arc(0.25, 0.25, 0.25, 0.25, 90.0, -150.0, 5)])],
        '4' => vec![line(&[(0.35, 0.0), (0.35, 1.0), (0.0, 0.3), (0.5, 0.3)])],
        '5' => vec![chain(vec![line(&[(0.45, 1.0), (0.08, 1.0)]), arc(0.23, 0.3, 0.25, 0.3, 125.0, -150.0, 7)])],
        '6' => vec![chain(vec![arc(0.25, 0.5, 0.25, 0.5, 70.0, 180.0, 3), arc(0.25, 0.28, 0.25, 0.28, 180.0, 540.0, 8)])],
        '7' => vec![line(&[(0.0, 1.0), (0.5, 1.0), (0.15, 0.0)])],
        '8' => vec![chain(vec![arc(0.25, 0.75, 0.2, 0.25, -90.0, 270.0, 8), arc(0.25, 0.25, 0.25, 0.25, 90.0, -270.0, 8)])],
        '9' => vec![chain(vec![arc(0.25, 0.72, 0.25, 0.28, 0.0, 360.0, 8), line(&[(0.45, 0.0)])])],

        '²' => scaled(two, 0.45, 0.0, 0.55),
        '=' => vec![line(&[(0.05, 0.62), (0.45, 0.62)]), line(&[(0.05, 0.38), (0.45, 0.38)])],
        '+' => vec![line(&[(0.05, 0.5), (0.45, 0.5)]), line(&[(0.25, 0.3), (0.25, 0.7)])],
        '-' => vec![line(&[(0.1, 0.5), (0.4, 0.5)])],
        '.' => vec![dot(0.25, 0.0)],
        ',' => vec![line(&[(0.25, 0.05), (0.2, -0.1)])],
        ':' => vec![dot(0.25, 0.55), dot(0.25, 0.0)],
        '!' => vec![line(&[(0.25, 1.0), (0.25, 0.3)]), dot(0.25, 0.0)],
        '?' => vec![chain(vec![arc(0.25, 0.75, 0.22, 0.25, 150.0, -90.0, 5), line(&[(0.25, 0.3)])]), dot(0.25, 0.0)],
        '\'' => vec![line(&[(0.25, 1.0), (0.25, 0.8)])],
        '/' => vec![line(&[(0.0, 0.0), (0.5, 1.0)])],
        '(' => vec![arc(0.5, 0.5, 0.3, 0.6, 125.0, 235.0, 5)],
        ')' => vec![arc(0.0, 0.5, 0.3, 0.6, 55.0, -55.0, 5)],
        _ => return None,
    };
    Some(g)
}

/// Strokes of `c`, or `None` if the character is not in the font.
pub fn glyph(c: char) -> Option<Vec<Stroke>> {
    raw_glyph(c).map(|g| g.into_iter().map(dedup).filter(|s| s.len() >= 2).collect())
}

pub fn is_supported(c: char) -> bool {
    raw_glyph(c).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(c: char) -> usize {
        glyph(c).unwrap().len()
    }

    #[test]
    fn stroke_counts() {
        assert_eq!(count('E'), 4);
        assert_eq!(count('R'), 2);
        assert_eq!(count('S'), 1);
        assert_eq!(count('m'), 2);
        assert_eq!(count('c'), 1);
        assert_eq!(count('='), 2);
        assert_eq!(count('²'), 1);
        assert_eq!(count('H'), 3);
        assert_eq!(count(' '), 0);
    }

    #[test]
    fn full_character_set() {
        let all = ('A'..='Z').chain('a'..='z').chain('0'..='9').chain("=²+-.,:!?'/() ".chars());
        for c in all {
            let g = glyph(c).unwrap_or_else(|| panic!("missing {c}"));
            for s in &g {
                assert!(s.len() >= 2);
                for w in s.windows(2) {
                    assert!((w[0].0 - w[1].0).hypot(w[0].1 - w[1].1) > 1e-9, "{c}");
                }
                for &(x, y) in s {
                    assert!((-1e-9..=0.5 + 1e-9).contains(&x), "{c} x={x}");
                    assert!((-0.3 - 1e-9..=1.0 + 1e-9).contains(&y), "{c} y={y}");
                }
            }
        }
        assert!(glyph('#').is_none());
    }
}
