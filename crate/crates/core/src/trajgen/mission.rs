//! Approach / write / return missions and the MAV reference derived from the
//! end-effector path.

use crate::geometry::{rotation_from_axes, UnitQuat, Vec3};
use crate::nmpc::ReferenceSource;
use crate::params::{ContactSurface, VehicleParams};
use crate::state::{ControlInput, ReferencePoint, RigidBodyState, Stage};
use crate::trajgen::profile::{time_parameterize, EeSample, VelocityProfile};
use crate::trajgen::{strokes_to_segments, text_strokes, PathSegment, TextLayout, TrajgenError};

/// MAV attitude with zero roll and pitch whose body x-axis points into the surface.
pub fn facing_orientation(surface: &ContactSurface) -> UnitQuat {
    let n = surface.normal_w();
    let h = Vec3::new(-n.x, -n.y, 0.0);
    if h.norm() < 1e-9 {
        return UnitQuat::identity();
    }
    let x = h.normalize();
    let z = Vec3::z();
    rotation_from_axes(&x, &z.cross(&x), &z)
}

/// MAV references that place the nominal end effector on the sampled path.
///
/// `nominal_force` is the normal force reference applied on pen-down samples.
pub fn derive_mav_reference(samples: &[EeSample], surface: &ContactSurface, params: &VehicleParams, nominal_force: f64) -> Vec<ReferencePoint> {
    let q = facing_orientation(surface);
    let r_be0 = params.nominal_ee_position;
    let omega = Vec3::zeros();
    let r_wt = surface.t_wt.rotation;
    samples
        .iter()
        .map(|s| {
            let ee_w = surface.to_world(&s.position);
            let ee_v = r_wt * s.velocity;
            ReferencePoint {
                time: s.time,
                mav_position: ee_w - q * r_be0,
                mav_velocity: ee_v - q * omega.cross(&r_be0),
                orientation: q,
                body_rate: omega,
                ee_position: ee_w,
                ee_velocity: ee_v,
                contact_force: if s.pen_down { nominal_force } else { 0.0 },
                ee_tracking_enabled: s.stage == Stage::Write,
                pen_down: s.pen_down,
                stage: s.stage,
                input: ControlInput::hover(params),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionSpec {
    pub text: String,
    pub layout: TextLayout,
    pub profile: VelocityProfile,
    /// Reference sample rate (Hz).
    pub rate: f64,
    /// Distance of the home position from the surface (m).
    pub home_distance: f64,
    /// Hover time at home before the approach and after the return (s).
    pub dwell: f64,
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self {
            text: "RSS".into(),
            layout: TextLayout::default(),
            profile: VelocityProfile::default(),
            rate: 100.0,
            home_distance: 0.8,
            dwell: 1.0,
        }
    }
}

/// Sampled reference stream of a complete mission.
#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub samples: Vec<ReferencePoint>,
    pub rate: f64,
    /// Planned pen-down strokes in T.
    pub strokes: Vec<Vec<Vec3>>,
}

impl Mission {
    pub fn plan(spec: &MissionSpec, surface: &ContactSurface, params: &VehicleParams) -> Result<Self, TrajgenError> {
        let strokes = text_strokes(&spec.text, &spec.layout)?;
        Self::plan_strokes(strokes, spec, surface, params)
    }

    /// Plans a mission over explicit pen-down strokes in T (`spec.text` is
    /// ignored). Each stroke needs at least two points.
    pub fn plan_strokes(strokes: Vec<Vec<Vec3>>, spec: &MissionSpec, surface: &ContactSurface, params: &VehicleParams) -> Result<Self, TrajgenError> {
        let l = &spec.layout;
        if !(l.height > 0.0 && l.standoff > 0.0 && l.penetration >= 0.0) {
            return Err(TrajgenError::InvalidParameter("height and standoff must be positive, penetration non-negative".into()));
        }
        if !(spec.home_distance > spec.layout.standoff) {
            return Err(TrajgenError::InvalidParameter("home must lie beyond the standoff plane".into()));
        }
        if !(spec.dwell >= 0.0) {
            return Err(TrajgenError::InvalidParameter("dwell must be non-negative".into()));
        }
        if strokes.iter().any(|s| s.len() < 2) {
            return Err(TrajgenError::InvalidParameter("strokes need at least two points".into()));
        }
        for p in strokes.iter().flatten() {
            if !surface.within_extents(p) {
                return Err(TrajgenError::OutsideSurface { x: p.x, y: p.y });
            }
        }
        let (cx, cy) = spec.layout.center;
        let home = Vec3::new(cx, cy, spec.home_distance);
        let standoff = spec.layout.standoff;

        let mut segments = Vec::new();
        let mut stages = Vec::new();
        if let (Some(first), Some(last)) = (strokes.first(), strokes.last()) {
            let start = first[0];
            let end = *last.last().unwrap();
            let above = |p: &Vec3| Vec3::new(p.x, p.y, standoff);
            segments.push(PathSegment {
                points: vec![home, above(&start)],
                pen_down: false,
            });
            stages.push(Stage::Approach);
            let mut write = vec![PathSegment {
                points: vec![above(&start), start],
                pen_down: false,
            }];
            write.extend(strokes_to_segments(&strokes, standoff));
            write.push(PathSegment {
                points: vec![end, above(&end)],
                pen_down: false,
            });
            stages.extend(std::iter::repeat(Stage::Write).take(write.len()));
            segments.extend(write);
            segments.push(PathSegment {
                points: vec![above(&end), home],
                pen_down: false,
            });
            stages.push(Stage::Return);
        } else {
            segments.push(PathSegment {
                points: vec![home],
                pen_down: false,
            });
            stages.push(Stage::Approach);
        }

        let mut ee = time_parameterize(&segments, &spec.profile, spec.rate)?;
        for s in ee.iter_mut() {
            s.stage = stages[s.segment];
        }
        let nominal_force = surface.force_at_depth(spec.layout.penetration);
        let core = derive_mav_reference(&ee, surface, params, nominal_force);
        let mut mission = Self {
            samples: core,
            rate: spec.rate,
            strokes,
        };
        mission.add_dwell(spec.dwell);
        Ok(mission)
    }

    /// Hover at `position` with `orientation` for `duration` seconds.
    pub fn hover(position: Vec3, orientation: UnitQuat, duration: f64, rate: f64, params: &VehicleParams) -> Self {
        let n = (duration * rate).round().max(0.0) as usize;
        let samples = (0..=n).map(|k| ReferencePoint::hover(k as f64 / rate, position, orientation, params)).collect();
        Self {
            samples,
            rate,
            strokes: Vec::new(),
        }
    }

    fn add_dwell(&mut self, dwell: f64) {
        let n = (dwell * self.rate).round() as usize;
        if n == 0 || self.samples.is_empty() {
            return;
        }
        let dt = 1.0 / self.rate;
        let first = self.samples[0];
        let last = *self.samples.last().unwrap();
        let mut out = Vec::with_capacity(self.samples.len() + 2 * n);
        out.extend((0..n).map(|k| ReferencePoint { time: k as f64 * dt, ..first }));
        let offset = n as f64 * dt;
        out.extend(self.samples.iter().map(|s| ReferencePoint { time: s.time + offset, ..*s }));
        let t_end = out.last().unwrap().time;
        out.extend((1..=n).map(|k| ReferencePoint {
            time: t_end + k as f64 * dt,
            stage: Stage::Return,
            ..last
        }));
        self.samples = out;
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.time)
    }

    /// MAV state at rest on the first reference.
    pub fn initial_state(&self) -> RigidBodyState {
        let r = self.samples[0];
        RigidBodyState::at_rest(r.mav_position, r.orientation)
    }

    /// Number of control ticks needed to run through the mission at `rate`.
    pub fn ticks(&self) -> usize {
        (self.duration() * self.rate).round() as usize + 1
    }
}

impl ReferenceSource for Mission {
    fn sample(&self, t: f64) -> ReferencePoint {
        let n = self.samples.len();
        let x = (t * self.rate).max(0.0);
        let nearest = x.round();
        let (i, frac) = if (x - nearest).abs() < 1e-6 { (nearest as usize, 0.0) } else { (x.floor() as usize, x - x.floor()) };
        if i + 1 >= n {
            return ReferencePoint { time: t, ..self.samples[n - 1] };
        }
        let a = &self.samples[i];
        if frac == 0.0 {
            return ReferencePoint { time: t, ..*a };
        }
        let b = &self.samples[i + 1];
        let lerp = |p: &Vec3, q: &Vec3| p + (q - p) * frac;
        ReferencePoint {
            time: t,
            mav_position: lerp(&a.mav_position, &b.mav_position),
            mav_velocity: lerp(&a.mav_velocity, &b.mav_velocity),
            ee_position: lerp(&a.ee_position, &b.ee_position),
            ee_velocity: lerp(&a.ee_velocity, &b.ee_velocity),
            ..*a
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rot_z;

    fn setup() -> (ContactSurface, VehicleParams) {
        (ContactSurface::default(), VehicleParams::default())
    }

    #[test]
    fn facing_default_surface() {
        let (s, _) = setup();
        let q = facing_orientation(&s);
        assert!((q * Vec3::x() + s.normal_w()).norm() < 1e-12);
        assert!((q * Vec3::z() - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn static_reference_identity_yaw() {
        let p = VehicleParams::default();
        // Surface normal along -x makes the facing yaw the identity.
        let s = ContactSurface::vertical(Vec3::new(1.0, 0.0, 1.5), std::f64::consts::PI, 42.95, (0.5, 0.25));
        assert!(facing_orientation(&s).angle() < 1e-12);
        let e = EeSample {
            time: 0.0,
            position: Vec3::new(0.1, 0.05, 0.02),
            velocity: Vec3::zeros(),
            pen_down: false,
            segment: 0,
            stage: Stage::Approach,
        };
        let r = derive_mav_reference(&[e], &s, &p, 0.2)[0];
        assert!((r.mav_position - (r.ee_position - p.nominal_ee_position)).norm() < 1e-15);
        assert_eq!(r.contact_force, 0.0);
        assert!(!r.ee_tracking_enabled);
    }

    #[test]
    fn pen_down_force_and_velocity() {
        let (s, p) = setup();
        let e = EeSample {
            time: 0.0,
            position: Vec3::new(0.0, 0.0, -0.005),
            velocity: Vec3::new(0.05, 0.01, 0.0),
            pen_down: true,
            segment: 0,
            stage: Stage::Write,
        };
        let f = s.force_at_depth(0.005);
        assert!((f - 0.2148).abs() < 1e-4);
        let r = derive_mav_reference(&[e], &s, &p, f)[0];
        assert_eq!(r.contact_force, f);
        assert!(r.ee_tracking_enabled);
        assert_eq!(r.mav_velocity, r.ee_velocity);
        assert!((r.ee_velocity.norm() - e.velocity.norm()).abs() < 1e-15);
    }

    #[test]
    fn rss_mission_structure() {
        let (s, p) = setup();
        let m = Mission::plan(&MissionSpec::default(), &s, &p).unwrap();
        assert_eq!(m.strokes.len(), 4);
        let dt = 1.0 / m.rate;
        for w in m.samples.windows(2) {
            assert!((w[1].time - w[0].time - dt).abs() < 1e-9);
            assert!((w[1].ee_position - w[0].ee_position).norm() <= 0.075 * dt + 1e-12);
        }
        // Stages appear in order and EE tracking is on exactly while writing.
        let order: Vec<Stage> = m.samples.iter().map(|r| r.stage).collect();
        assert!(order.windows(2).all(|w| w[0] as u8 <= w[1] as u8));
        assert!(m.samples.iter().all(|r| r.ee_tracking_enabled == (r.stage == Stage::Write)));
        for r in &m.samples {
            let ee = r.mav_position + r.orientation * p.nominal_ee_position;
            assert!((ee - r.ee_position).norm() < 1e-12);
            if r.pen_down {
                let t = s.to_surface(&r.ee_position);
                assert!(s.within_extents(&t));
                assert!((t.z + 0.005).abs() < 1e-12);
            }
        }
        let first = m.samples[0];
        assert!((s.to_surface(&first.ee_position).z - 0.8).abs() < 1e-12);
        let contact = m.samples.iter().filter(|r| r.pen_down).count() as f64 * dt;
        assert!(contact > 30.0 && contact < 120.0, "{contact}");
    }

    #[test]
    fn explicit_strokes_match_text() {
        let (s, p) = setup();
        let spec = MissionSpec::default();
        let strokes = text_strokes(&spec.text, &spec.layout).unwrap();
        let a = Mission::plan(&spec, &s, &p).unwrap();
        let b = Mission::plan_strokes(strokes, &spec, &s, &p).unwrap();
        assert_eq!(a, b);
        let dot = vec![vec![Vec3::new(0.0, 0.0, -0.005)]];
        assert!(Mission::plan_strokes(dot, &spec, &s, &p).is_err());
    }

    #[test]
    fn rejects_text_off_the_board() {
        let (s, p) = setup();
        let spec = MissionSpec {
            text: "RSSRSSRS".into(),
            ..MissionSpec::default()
        };
        assert!(matches!(Mission::plan(&spec, &s, &p), Err(TrajgenError::OutsideSurface { .. })));
    }

    #[test]
    fn source_holds_last_sample() {
        let p = VehicleParams::default();
        let m = Mission::hover(Vec3::new(0.0, 0.0, 1.0), rot_z(0.3), 1.0, 100.0, &p);
        assert_eq!(m.samples.len(), 101);
        let r = m.sample(50.0);
        assert_eq!(r.mav_position, m.samples[100].mav_position);
        assert_eq!(r.time, 50.0);
    }

    #[test]
    fn source_interpolates_between_samples() {
        let (s, p) = setup();
        let m = Mission::plan(&MissionSpec::default(), &s, &p).unwrap();
        let k = 700;
        let t = (k as f64 + 0.5) / m.rate;
        let r = m.sample(t);
        let mid = 0.5 * (m.samples[k].ee_position + m.samples[k + 1].ee_position);
        assert!((r.ee_position - mid).norm() < 1e-12);
        assert_eq!(m.sample(k as f64 * 0.01).ee_position, m.samples[k].ee_position);
    }
}
