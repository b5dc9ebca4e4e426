//! Mission configuration files (TOML). See `docs/config.md` for the schema.
//!
//! Every key has a default, unknown keys are rejected, and [`MissionConfig::to_canonical`]
//! writes every key in a fixed order so that canonical files round-trip byte for byte.

use std::path::{Path, PathBuf};

use aerowrite::delta::SafetyBox;
use aerowrite::nmpc::{GainSet, InputWeight, OcpConfig, StateWeights};
use aerowrite::sim::{ClosedLoopConfig, Mismatch, PlantConfig, SensorConfig, ServoResponse};
use aerowrite::trajgen::{Mission, MissionSpec, TextLayout, TrajgenError, VelocityProfile};
use aerowrite::{ContactSurface, Vec3};
use serde::{Deserialize, Serialize};

/// Where in the file a problem was found.
#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", at(.path, .location))]
    Parse { path: PathBuf, location: Option<Location>, message: String },
    #[error("{}: {key}: {message}", at(.path, .location))]
    Invalid { path: PathBuf, location: Option<Location>, key: String, message: String },
}

fn at(path: &Path, loc: &Option<Location>) -> String {
    match loc {
        Some(l) => format!("{}:{}:{}", path.display(), l.line, l.column),
        None => path.display().to_string(),
    }
}

impl ConfigError {
    pub fn location(&self) -> Option<&Location> {
        match self {
            Self::Io { .. } => None,
            Self::Parse { location, .. } | Self::Invalid { location, .. } => location.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionSection {
    /// Text to write. Mutually exclusive with `path`; a `[mission]` table
    /// must set one of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Explicit pen-down strokes as (x, y) points in the surface frame (m).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<Vec<[f64; 2]>>>,
    pub height: f64,
    pub center: [f64; 2],
    pub penetration: f64,
    pub standoff: f64,
    pub home_distance: f64,
    pub dwell: f64,
    pub rate: f64,
}

impl Default for MissionSection {
    fn default() -> Self {
        let spec = MissionSpec::default();
        Self {
            text: Some(spec.text),
            path: None,
            height: spec.layout.height,
            center: [spec.layout.center.0, spec.layout.center.1],
            penetration: spec.layout.penetration,
            standoff: spec.layout.standoff,
            home_distance: spec.home_distance,
            dwell: spec.dwell,
            rate: spec.rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub v_max: f64,
    pub a_max: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        let p = VelocityProfile::default();
        Self { v_max: p.v_max, a_max: p.a_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSection {
    /// Origin of the surface frame in W (m).
    pub origin: [f64; 3],
    /// Heading of the outward normal (deg).
    pub normal_yaw_deg: f64,
    pub spring_coeff: f64,
    pub half_extents: [f64; 2],
}

impl Default for SurfaceSection {
    fn default() -> Self {
        let s = ContactSurface::default();
        let o = s.t_wt.translation.vector;
        let n = s.normal_w();
        Self {
            origin: [o.x, o.y, o.z],
            normal_yaw_deg: n.y.atan2(n.x).to_degrees().round(),
            spring_coeff: s.spring_coeff,
            half_extents: [s.half_extents.0, s.half_extents.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsSection {
    pub mav_position: f64,
    pub ee_position: f64,
    pub velocity: f64,
    pub body_rate: f64,
    pub attitude: f64,
    pub force: f64,
    /// Diagonal input weights (M_x, M_y, M_z, T, EE_x, EE_y, EE_z).
    pub input: [f64; 7],
    /// Terminal weights as a multiple of the stage weights.
    pub terminal_scale: f64,
}

impl Default for GainsSection {
    fn default() -> Self {
        let g = GainSet::default();
        let s = &g.stage;
        let mut input = [0.0; 7];
        for (k, v) in input.iter_mut().enumerate() {
            *v = g.input[(k, k)];
        }
        Self {
            mav_position: s.mav_position[(0, 0)],
            ee_position: s.ee_position[(0, 0)],
            velocity: s.velocity[(0, 0)],
            body_rate: s.body_rate[(0, 0)],
            attitude: s.attitude[(0, 0)],
            force: s.force,
            input,
            terminal_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcpSection {
    pub horizon_steps: usize,
    /// Discretization step, also the control period (s).
    pub step: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Bound on each body moment component (N m).
    pub moment_max: f64,
}

impl Default for OcpSection {
    fn default() -> Self {
        let o = OcpConfig::default();
        Self {
            horizon_steps: o.horizon_steps,
            step: o.step,
            max_iterations: o.max_iterations,
            tolerance: o.tolerance,
            moment_max: o.u_ub[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MismatchSection {
    pub mass: f64,
    pub inertia: f64,
    pub spring: f64,
    pub moment_coeff: f64,
}

impl Default for MismatchSection {
    fn default() -> Self {
        let m = Mismatch::default();
        Self {
            mass: m.mass,
            inertia: m.inertia,
            spring: m.spring,
            moment_coeff: m.moment_coeff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    pub position: f64,
    pub attitude_deg: f64,
    pub velocity: f64,
    pub body_rate: f64,
    pub force: f64,
    pub delay_ticks: usize,
}

impl Default for SensorSection {
    fn default() -> Self {
        let s = SensorConfig::default();
        Self {
            position: s.position,
            attitude_deg: 0.1,
            velocity: s.velocity,
            body_rate: s.body_rate,
            force: s.force,
            delay_ticks: s.delay_ticks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    pub seed: u64,
    pub substeps: usize,
    /// First-order servo lag (s); 0 for an instantaneous arm.
    pub servo_tau: f64,
    pub mismatch: MismatchSection,
    pub sensors: SensorSection,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = PlantConfig::default();
        Self {
            seed: p.seed,
            substeps: p.substeps,
            servo_tau: 0.0,
            mismatch: MismatchSection::default(),
            sensors: SensorSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    pub mission: MissionSection,
    pub profile: ProfileSection,
    pub surface: SurfaceSection,
    pub gains: GainsSection,
    pub ocp: OcpSection,
    pub plant: PlantSection,
    pub output: OutputSection,
}

/// Largest seed that survives a TOML round trip (integers are signed 64-bit).
pub const MAX_SEED: u64 = i64::MAX as u64;

struct Problem {
    key: &'static str,
    message: String,
}

fn problem(key: &'static str, message: impl Into<String>) -> Problem {
    Problem { key, message: message.into() }
}

fn positive(key: &'static str, v: f64) -> Result<(), Problem> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(problem(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &'static str, v: f64) -> Result<(), Problem> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(problem(key, format!("must be non-negative, got {v}")))
    }
}

fn finite(key: &'static str, v: &[f64]) -> Result<(), Problem> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(problem(key, "must be finite"))
    }
}

impl MissionConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses and validates config text; `path` is only used in messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            location: e.span().map(|s| location_of(text, s.start)),
            message: e.message().trim_end().to_string(),
        })?;
        cfg.check().map_err(|p| ConfigError::Invalid {
            path: path.to_path_buf(),
            location: locate_key(text, p.key),
            key: p.key.to_string(),
            message: p.message,
        })?;
        Ok(cfg)
    }

    /// Validates without source text (errors carry no location).
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check().map_err(|p| ConfigError::Invalid {
            path: PathBuf::from("<config>"),
            location: None,
            key: p.key.to_string(),
            message: p.message,
        })
    }

    /// Canonical TOML: every key, fixed order.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    fn check(&self) -> Result<(), Problem> {
        let m = &self.mission;
        match (&m.text, &m.path) {
            (Some(_), Some(_)) => return Err(problem("mission", "set either text or path, not both")),
            (None, None) => return Err(problem("mission", "one of text or path is required")),
            (_, Some(path)) => {
                if path.iter().any(|s| s.len() < 2) {
                    return Err(problem("mission.path", "every stroke needs at least two points"));
                }
                finite("mission.path", &path.iter().flatten().flatten().copied().collect::<Vec<_>>())?;
            }
            _ => {}
        }
        positive("mission.height", m.height)?;
        finite("mission.center", &m.center)?;
        non_negative("mission.penetration", m.penetration)?;
        positive("mission.standoff", m.standoff)?;
        positive("mission.home_distance", m.home_distance)?;
        if m.home_distance <= m.standoff {
            return Err(problem("mission.home_distance", "must exceed the standoff"));
        }
        non_negative("mission.dwell", m.dwell)?;
        positive("mission.rate", m.rate)?;
        positive("profile.v_max", self.profile.v_max)?;
        positive("profile.a_max", self.profile.a_max)?;

        let s = &self.surface;
        finite("surface.origin", &s.origin)?;
        finite("surface.normal_yaw_deg", &[s.normal_yaw_deg])?;
        positive("surface.spring_coeff", s.spring_coeff)?;
        positive("surface.half_extents", s.half_extents[0].min(s.half_extents[1]))?;

        let g = &self.gains;
        non_negative("gains.mav_position", g.mav_position)?;
        non_negative("gains.ee_position", g.ee_position)?;
        non_negative("gains.velocity", g.velocity)?;
        non_negative("gains.body_rate", g.body_rate)?;
        non_negative("gains.attitude", g.attitude)?;
        non_negative("gains.force", g.force)?;
        for &w in &g.input {
            non_negative("gains.input", w)?;
        }
        non_negative("gains.terminal_scale", g.terminal_scale)?;

        let o = &self.ocp;
        if o.horizon_steps == 0 {
            return Err(problem("ocp.horizon_steps", "must be at least 1"));
        }
        positive("ocp.step", o.step)?;
        if o.max_iterations == 0 {
            return Err(problem("ocp.max_iterations", "must be at least 1"));
        }
        non_negative("ocp.tolerance", o.tolerance)?;
        positive("ocp.moment_max", o.moment_max)?;

        let p = &self.plant;
        if p.seed > MAX_SEED {
            return Err(problem("plant.seed", format!("must not exceed {MAX_SEED}")));
        }
        if p.substeps == 0 {
            return Err(problem("plant.substeps", "must be at least 1"));
        }
        non_negative("plant.servo_tau", p.servo_tau)?;
        positive("plant.mismatch.mass", p.mismatch.mass)?;
        positive("plant.mismatch.inertia", p.mismatch.inertia)?;
        positive("plant.mismatch.spring", p.mismatch.spring)?;
        positive("plant.mismatch.moment_coeff", p.mismatch.moment_coeff)?;
        non_negative("plant.sensors.position", p.sensors.position)?;
        non_negative("plant.sensors.attitude_deg", p.sensors.attitude_deg)?;
        non_negative("plant.sensors.velocity", p.sensors.velocity)?;
        non_negative("plant.sensors.body_rate", p.sensors.body_rate)?;
        non_negative("plant.sensors.force", p.sensors.force)?;

        self.closed_loop().validate().map_err(|e| problem("config", e))?;
        self.plan().map_err(|e| problem(if m.path.is_some() { "mission.path" } else { "mission.text" }, e.to_string()))?;
        Ok(())
    }

    pub fn surface(&self) -> ContactSurface {
        let s = &self.surface;
        ContactSurface::vertical(Vec3::from(s.origin), s.normal_yaw_deg.to_radians(), s.spring_coeff, (s.half_extents[0], s.half_extents[1]))
    }

    pub fn gains(&self) -> GainSet {
        let g = &self.gains;
        let stage = StateWeights::diagonal(g.mav_position, g.ee_position, g.velocity, g.body_rate, g.attitude, g.force);
        let k = g.terminal_scale;
        GainSet {
            stage,
            input: InputWeight::from_diagonal(&g.input.into()),
            terminal: StateWeights::diagonal(k * g.mav_position, k * g.ee_position, k * g.velocity, k * g.body_rate, k * g.attitude, k * g.force),
        }
    }

    pub fn closed_loop(&self) -> ClosedLoopConfig {
        let base = ClosedLoopConfig::default();
        let o = &self.ocp;
        let ocp = OcpConfig {
            horizon_steps: o.horizon_steps,
            step: o.step,
            max_iterations: o.max_iterations,
            tolerance: o.tolerance,
            ..OcpConfig::with_bounds(&base.params, &SafetyBox::default(), o.moment_max)
        };
        let p = &self.plant;
        let (mm, ss) = (&p.mismatch, &p.sensors);
        let plant = PlantConfig {
            mismatch: Mismatch {
                mass: mm.mass,
                inertia: mm.inertia,
                spring: mm.spring,
                moment_coeff: mm.moment_coeff,
            },
            servo: if p.servo_tau > 0.0 { ServoResponse::FirstOrder(p.servo_tau) } else { ServoResponse::Instantaneous },
            sensors: SensorConfig {
                position: ss.position,
                attitude: ss.attitude_deg.to_radians(),
                velocity: ss.velocity,
                body_rate: ss.body_rate,
                force: ss.force,
                delay_ticks: ss.delay_ticks,
            },
            seed: p.seed,
            substeps: p.substeps,
        };
        ClosedLoopConfig {
            ocp,
            gains: self.gains(),
            surface: self.surface(),
            plant,
            ..base
        }
    }

    pub fn mission_spec(&self) -> MissionSpec {
        let m = &self.mission;
        MissionSpec {
            text: m.text.clone().unwrap_or_default(),
            layout: TextLayout {
                height: m.height,
                center: (m.center[0], m.center[1]),
                penetration: m.penetration,
                standoff: m.standoff,
            },
            profile: VelocityProfile {
                v_max: self.profile.v_max,
                a_max: self.profile.a_max,
            },
            rate: m.rate,
            home_distance: m.home_distance,
            dwell: m.dwell,
        }
    }

    /// Plans the reference mission.
    pub fn plan(&self) -> Result<Mission, TrajgenError> {
        let spec = self.mission_spec();
        let cl = self.closed_loop();
        match &self.mission.path {
            Some(path) => {
                let z = -self.mission.penetration;
                let strokes = path.iter().map(|s| s.iter().map(|p| Vec3::new(p[0], p[1], z)).collect()).collect();
                Mission::plan_strokes(strokes, &spec, &cl.surface, &cl.params)
            }
            None => Mission::plan(&spec, &cl.surface, &cl.params),
        }
    }

    /// Short label of the mission for reports.
    pub fn describe(&self) -> String {
        match (&self.mission.text, &self.mission.path) {
            (_, Some(p)) => format!("explicit path ({} strokes)", p.len()),
            (Some(t), None) if t.is_empty() => "hover".to_string(),
            (Some(t), None) => format!("text {t:?}"),
            (None, None) => "none".to_string(),
        }
    }
}

fn location_of(text: &str, offset: usize) -> Location {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Location { line, column }
}

/// Line of `key` (dotted, e.g. `plant.sensors.force`) in `text`. Falls back to
/// the table header when the key itself is absent (it took its default).
fn locate_key(text: &str, key: &str) -> Option<Location> {
    let (table, leaf) = key.rsplit_once('.').unwrap_or(("", key));
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = name.trim().to_string();
            if current == key || current == table {
                header.get_or_insert(Location { line: i + 1, column: 1 });
            }
            continue;
        }
        if current == table {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == leaf {
                    let column = raw.len() - raw.trim_start().len() + 1;
                    return Some(Location { line: i + 1, column });
                }
            }
        }
    }
    header
}
