//! A single closed-loop run and its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use aerowrite::eval::{self, planar_strokes, tracking_stats_over, BoxStats, EvalError, IcpConfig, TrackingStats, VisualError};
use aerowrite::sim::{run_closed_loop, ClosedLoopRun, LogRecord, RunFailure};
use aerowrite::trajgen::Mission;
use aerowrite::ContactSurface;

use crate::config::{ConfigError, MissionConfig};

pub const LOG_FILE: &str = "log.csv";
pub const STATS_FILE: &str = "stats.csv";
pub const SVG_FILE: &str = "overlay.svg";
pub const REPORT_FILE: &str = "report.txt";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed at tick {}: {}", .0.tick, .0.reason)]
    Simulation(RunFailure),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for simulation
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Simulation(_) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A finished run with its evaluation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: MissionConfig,
    pub mission: Mission,
    pub surface: ContactSurface,
    pub run: ClosedLoopRun,
    /// Errors over pen-down ticks.
    pub contact: Option<TrackingStats>,
    /// Errors over every tick.
    pub flight: Option<TrackingStats>,
    /// `None` when fewer than three points were drawn.
    pub visual: Option<VisualError>,
}

impl RunOutcome {
    pub fn records(&self) -> &[LogRecord] {
        &self.run.log.records
    }

    /// Pen-down segments of the reference that the tip actually touched.
    pub fn contact_segments(&self) -> usize {
        let mut count = 0;
        let mut touched = false;
        let mut prev_down = false;
        for r in self.records() {
            if r.pen_down && !prev_down {
                touched = false;
            }
            if r.pen_down && r.fc_true > 0.0 && !touched {
                touched = true;
                count += 1;
            }
            prev_down = r.pen_down;
        }
        count
    }

    /// Fraction of pen-down ticks with true contact.
    pub fn contact_ratio(&self) -> f64 {
        let down: Vec<_> = self.records().iter().filter(|r| r.pen_down).collect();
        if down.is_empty() {
            return 0.0;
        }
        down.iter().filter(|r| r.fc_true > 0.0).count() as f64 / down.len() as f64
    }

    pub fn median_cycle_ms(&self) -> f64 {
        let mut c = self.run.cycle_ms.clone();
        if c.is_empty() {
            return f64::NAN;
        }
        c.sort_by(f64::total_cmp);
        eval::quantile(&c, 0.5)
    }

    /// Ticks whose solve did not reach a cost at or below both the warm start
    /// and the constant hover guess.
    pub fn descent_violations(&self) -> usize {
        self.records()
            .iter()
            .filter(|r| r.cost > r.hover_cost || r.warm_cost.is_some_and(|w| r.cost > w))
            .count()
    }
}

/// Plans and simulates `config`, then evaluates the log. A simulation failure
/// is returned as an error together with the partial outcome.
pub fn simulate(config: &MissionConfig) -> Result<RunOutcome, (RunError, Option<Box<RunOutcome>>)> {
    config.validate().map_err(|e| (e.into(), None))?;
    let mission = config.plan().expect("validated configs plan");
    let cl = config.closed_loop();
    log::info!("simulating {} for {:.1} s", config.describe(), mission.duration());
    let run = run_closed_loop(&mission, &cl);
    let outcome = evaluate(config.clone(), mission, cl.surface, run).map_err(|e| (e, None))?;
    match outcome.run.log.failure.clone() {
        Some(f) => Err((RunError::Simulation(f), Some(Box::new(outcome)))),
        None => Ok(outcome),
    }
}

fn evaluate(config: MissionConfig, mission: Mission, surface: ContactSurface, run: ClosedLoopRun) -> Result<RunOutcome, RunError> {
    let contact = tracking_stats_over(&run.log, &surface, |r| r.pen_down);
    let flight = tracking_stats_over(&run.log, &surface, |_| true);
    let drawn = run.log.drawn_points(&surface);
    let visual = if drawn.len() >= 3 && !mission.strokes.is_empty() {
        match eval::visual_error(&planar_strokes(&mission.strokes), &drawn, &IcpConfig::default()) {
            Ok(v) => Some(v),
            Err(EvalError::Degenerate) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    Ok(RunOutcome {
        config,
        mission,
        surface,
        run,
        contact,
        flight,
        visual,
    })
}

/// Writes log.csv, stats.csv, overlay.svg, report.txt and the resolved
/// config into `dir`.
pub fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(LOG_FILE);
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    outcome.run.log.write_csv(io::BufWriter::new(file)).map_err(|e| RunError::Io {
        path: path.clone(),
        source: io::Error::other(e.to_string()),
    })?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))
    };
    write(STATS_FILE, stats_csv(outcome))?;
    write(SVG_FILE, overlay(outcome))?;
    write(REPORT_FILE, report(outcome))?;
    write(CONFIG_FILE, outcome.config.to_canonical())?;
    Ok(())
}

/// Simulates and writes the artifacts. On a simulation failure the partial
/// artifacts are still written.
pub fn execute(config: &MissionConfig, dir: &Path) -> Result<RunOutcome, RunError> {
    match simulate(config) {
        Ok(o) => {
            write_artifacts(&o, dir)?;
            Ok(o)
        }
        Err((e, partial)) => {
            if let Some(o) = partial {
                write_artifacts(&o, dir)?;
            }
            Err(e)
        }
    }
}

/// Shortest round-trip form, in exponent notation for very small or large
/// magnitudes.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub const STATS_HEADER: &str = "scope,quantity,samples,min,whisker_lo,q1,median,q3,whisker_hi,max";

fn stats_row(out: &mut String, scope: &str, quantity: &str, samples: usize, b: &BoxStats) {
    let v = [b.min, b.whisker_lo, b.q1, b.median, b.q3, b.whisker_hi, b.max].map(fmt_num);
    let _ = writeln!(out, "{scope},{quantity},{samples},{}", v.join(","));
}

/// Box-plot statistics (m): per-axis T-frame errors of the MAV and the tip,
/// over pen-down ticks (`contact`) and all ticks (`all`), and the visual error.
pub fn stats_csv(o: &RunOutcome) -> String {
    let mut s = String::from(STATS_HEADER);
    s.push('\n');
    for (scope, stats) in [("contact", &o.contact), ("all", &o.flight)] {
        if let Some(t) = stats {
            for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                stats_row(&mut s, scope, &format!("mav_{axis}"), t.samples, &t.mav[k]);
            }
            for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                stats_row(&mut s, scope, &format!("ee_{axis}"), t.samples, &t.ee[k]);
            }
        }
    }
    if let Some(v) = &o.visual {
        if let Some(b) = BoxStats::from_samples(&v.errors.distances) {
            stats_row(&mut s, "visual", "nearest_neighbor", v.errors.distances.len(), &b);
        }
    }
    s
}

fn overlay(o: &RunOutcome) -> String {
    let planned = planar_strokes(&o.mission.strokes);
    match &o.visual {
        Some(v) => eval::overlay_svg(&planned, &v.registered, &v.errors.distances),
        None => eval::overlay_svg(&planned, &o.run.log.drawn_points(&o.surface), &[]),
    }
}

fn mm_range(b: &BoxStats) -> String {
    format!("[{:+.3}, {:+.3}] median {:+.3}", 1e3 * b.min, 1e3 * b.max, 1e3 * b.median)
}

/// Human-readable summary. Wall-clock timings are left out so that reports
/// are reproducible.
pub fn report(o: &RunOutcome) -> String {
    let mut s = String::new();
    let recs = o.records();
    let dt = o.config.ocp.step;
    let _ = writeln!(s, "mission: {}", o.config.describe());
    let _ = writeln!(s, "profile: v_max {:.4} m/s, a_max {:.4} m/s^2", o.config.profile.v_max, o.config.profile.a_max);
    let _ = writeln!(s, "seed: {}", o.config.plant.seed);
    let _ = writeln!(s, "duration: {:.2} s planned, {} ticks simulated", o.mission.duration(), recs.len());
    match &o.run.log.failure {
        None => {
            let _ = writeln!(s, "status: complete");
        }
        Some(f) => {
            let _ = writeln!(s, "status: failed at tick {} ({})", f.tick, f.reason);
        }
    }
    let pen_down = recs.iter().filter(|r| r.pen_down).count();
    let _ = writeln!(s, "planned strokes: {}", o.mission.strokes.len());
    let _ = writeln!(
        s,
        "contact segments: {} ({:.2} s pen-down, contact on {:.1}% of pen-down ticks)",
        o.contact_segments(),
        pen_down as f64 * dt,
        100.0 * o.contact_ratio()
    );
    for (label, stats) in [("contact", &o.contact), ("all ticks", &o.flight)] {
        if let Some(t) = stats {
            let _ = writeln!(s, "tracking error in T over {label} (mm, {} samples):", t.samples);
            for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                let _ = writeln!(s, "  ee  {axis}: {}", mm_range(&t.ee[k]));
            }
            for (k, axis) in ["x", "y", "z"].iter().enumerate() {
                let _ = writeln!(s, "  mav {axis}: {}", mm_range(&t.mav[k]));
            }
        }
    }
    match &o.visual {
        Some(v) => {
            let e = &v.errors;
            let _ = writeln!(
                s,
                "visual error (mm, {} points): mean {:.2}, p95 {:.2}, max {:.2}",
                e.distances.len(),
                1e3 * e.mean,
                1e3 * e.p95,
                1e3 * e.max
            );
            let t = v.icp.translation();
            let _ = writeln!(
                s,
                "registration: rotation {:.3} deg, translation ({:.2}, {:.2}) mm, rms {:.2} mm, {} iterations",
                v.icp.transform.rotation.angle().to_degrees(),
                1e3 * t.x,
                1e3 * t.y,
                1e3 * v.icp.rms,
                v.icp.iterations
            );
        }
        None => {
            let _ = writeln!(s, "visual error: n/a (fewer than 3 drawn points)");
        }
    }
    let iters = recs.iter().map(|r| r.iterations).sum::<usize>() as f64 / recs.len().max(1) as f64;
    let fallbacks = recs.iter().filter(|r| r.fallback).count();
    let _ = writeln!(s, "solver: mean {iters:.2} iterations per tick, {fallbacks} fallbacks, {} descent violations", o.descent_violations());
    s
}
