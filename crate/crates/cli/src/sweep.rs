//! Parameter sweeps over the velocity profile or the text size.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{MissionConfig, MAX_SEED};
use crate::run::{execute, fmt_num, RunError, RunOutcome};

pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// `v_max` (m/s), optionally `v_max:a_max`; `a_max` defaults to `v_max / 2`.
    Velocity,
    /// Text cap height (m).
    Size,
}

impl FromStr for SweepAxis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "velocity" => Ok(Self::Velocity),
            "size" => Ok(Self::Size),
            _ => Err(SweepError::UnknownAxis(s.to_string())),
        }
    }
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Velocity => "velocity",
            Self::Size => "size",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep needs at least one value")]
    NoValues,
    #[error("unknown sweep axis {0:?} (expected velocity or size)")]
    UnknownAxis(String),
    #[error("bad sweep value {0:?}")]
    BadValue(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// One sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Velocity { v_max: f64, a_max: f64 },
    Size(f64),
}

impl SweepValue {
    pub fn parse(axis: SweepAxis, s: &str) -> Result<Self, SweepError> {
        let bad = || SweepError::BadValue(s.to_string());
        let num = |t: &str| -> Result<f64, SweepError> {
            let v: f64 = t.trim().parse().map_err(|_| bad())?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match axis {
            SweepAxis::Velocity => match s.split_once(':') {
                Some((v, a)) => Ok(Self::Velocity { v_max: num(v)?, a_max: num(a)? }),
                None => {
                    let v = num(s)?;
                    Ok(Self::Velocity { v_max: v, a_max: 0.5 * v })
                }
            },
            SweepAxis::Size => Ok(Self::Size(num(s)?)),
        }
    }

    pub fn apply(&self, base: &MissionConfig) -> MissionConfig {
        let mut c = base.clone();
        match *self {
            Self::Velocity { v_max, a_max } => {
                c.profile.v_max = v_max;
                c.profile.a_max = a_max;
            }
            Self::Size(h) => c.mission.height = h,
        }
        c
    }

    fn label(&self) -> String {
        match self {
            Self::Velocity { v_max, a_max } => format!("v{v_max}_a{a_max}"),
            Self::Size(h) => format!("h{h}"),
        }
    }
}

/// Seed of run `index` derived from the sweep's base seed.
pub fn derive_seed(base: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index as u64 + 1);
    rng.next_u64() & MAX_SEED
}

/// Result of one sweep run; `outcome` is `None` when the run failed before
/// producing a log.
#[derive(Debug)]
pub struct SweepRow {
    pub index: usize,
    pub value: SweepValue,
    pub seed: u64,
    pub dir: PathBuf,
    pub outcome: Option<RunOutcome>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && self.outcome.is_some()
    }
}

/// Runs `base` once per value with derived seeds, writing each run into
/// `out_dir/run_NN_<value>` and the summary into `out_dir/sweep.csv`. A
/// failing run is recorded and the sweep continues.
pub fn sweep(base: &MissionConfig, axis: SweepAxis, values: &[SweepValue], seed: u64, out_dir: &Path) -> Result<Vec<SweepRow>, SweepError> {
    if values.is_empty() {
        return Err(SweepError::NoValues);
    }
    let mut rows = Vec::with_capacity(values.len());
    for (i, value) in values.iter().enumerate() {
        let mut cfg = value.apply(base);
        cfg.plant.seed = derive_seed(seed, i);
        let dir = out_dir.join(format!("run_{i:02}_{}", value.label()));
        log::info!("{} sweep run {}/{}: {}", axis.name(), i + 1, values.len(), value.label());
        let (outcome, error) = match execute(&cfg, &dir) {
            Ok(o) => (Some(o), None),
            Err(e) => {
                log::warn!("run {i} failed: {e}");
                (None, Some(e))
            }
        };
        rows.push(SweepRow {
            index: i,
            value: *value,
            seed: cfg.plant.seed,
            dir,
            outcome,
            error: error.as_ref().map(RunError::to_string),
        });
    }
    fs::create_dir_all(out_dir).map_err(|source| SweepError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let path = out_dir.join(SWEEP_FILE);
    fs::write(&path, sweep_csv(&rows)).map_err(|source| SweepError::Io { path, source })?;
    Ok(rows)
}

const BOX_FIELDS: [&str; 5] = ["min", "q1", "median", "q3", "max"];

pub fn sweep_header() -> Vec<String> {
    let mut h: Vec<String> = ["index", "v_max", "a_max", "height", "seed", "status"].map(String::from).to_vec();
    for q in ["mav_x", "mav_y", "mav_z", "ee_x", "ee_y", "ee_z"] {
        h.extend(BOX_FIELDS.iter().map(|f| format!("{q}_{f}")));
    }
    h.extend(["contact_segments", "contact_ratio", "visual_mean", "visual_p95", "visual_max"].map(String::from));
    h
}

fn sweep_record(r: &SweepRow) -> Vec<String> {
    let (v, a, h) = match (r.value, &r.outcome) {
        (_, Some(o)) => (o.config.profile.v_max, o.config.profile.a_max, o.config.mission.height),
        (SweepValue::Velocity { v_max, a_max }, None) => (v_max, a_max, f64::NAN),
        (SweepValue::Size(h), None) => (f64::NAN, f64::NAN, h),
    };
    let status = match &r.error {
        None => "ok".to_string(),
        Some(e) => format!("failed: {e}"),
    };
    let mut out = vec![r.index.to_string(), fmt_num(v), fmt_num(a), fmt_num(h), r.seed.to_string(), status];
    let stats = r.outcome.as_ref().and_then(|o| o.contact.as_ref());
    for k in 0..6 {
        match stats {
            Some(t) => {
                let b = if k < 3 { &t.mav[k] } else { &t.ee[k - 3] };
                out.extend([b.min, b.q1, b.median, b.q3, b.max].map(fmt_num));
            }
            None => out.extend(std::iter::repeat(String::new()).take(BOX_FIELDS.len())),
        }
    }
    let opt = |x: Option<f64>| x.map_or(String::new(), fmt_num);
    let o = r.outcome.as_ref();
    let vis = o.and_then(|o| o.visual.as_ref()).map(|v| &v.errors);
    out.push(o.map_or(String::new(), |o| o.contact_segments().to_string()));
    out.push(opt(o.map(|o| o.contact_ratio())));
    out.push(opt(vis.map(|e| e.mean)));
    out.push(opt(vis.map(|e| e.p95)));
    out.push(opt(vis.map(|e| e.max)));
    out
}

/// One row per run (errors in m, T frame, pen-down ticks).
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(sweep_header()).expect("in-memory write");
    for r in rows {
        w.write_record(sweep_record(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
