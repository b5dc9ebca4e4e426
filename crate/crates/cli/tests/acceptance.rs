//! Acceptance suite: one pass/fail line per criterion. Mission-level criteria
//! drive the `aerowrite` binary and read back its artifacts.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use aerowrite::allocation::{solve_allocation, AllocationConfig};
use aerowrite::delta::{forward_kinematics, inverse_kinematics, ArmGeometry, JointAngles};
use aerowrite::dynamics::{rk4_step, AllocationMatrix, MotorThrusts};
use aerowrite::nmpc::{GainSet, OcpConfig, SlqSolver};
use aerowrite::sim::MissionLog;
use aerowrite::state::{InputVector, INPUT_DIM};
use aerowrite::trajgen::mission::facing_orientation;
use aerowrite::trajgen::VelocityProfile;
use aerowrite::{ContactSurface, ControlInput, ReferencePoint, RigidBodyState, UnitQuat, Vec3, VehicleParams};
use aerowrite_cli::config::{MissionSection, ProfileSection};
use aerowrite_cli::MissionConfig;
use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bundled(name: &str) -> MissionConfig {
    MissionConfig::load(&configs().join(name)).unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &MissionConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, cfg.to_canonical()).unwrap();
    path
}

/// Runs the binary; returns exit code and stdout.
fn aerowrite(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_aerowrite")).args(args).env("RUST_LOG", "warn").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    (out.status.code().unwrap_or(-1), stdout)
}

fn run_config(cfg: &Path, out: &Path) -> (i32, String) {
    aerowrite(&["run", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
}

fn read_log(dir: &Path) -> MissionLog {
    MissionLog::read_csv(fs::File::open(dir.join("log.csv")).unwrap()).unwrap()
}

/// `(scope, quantity) -> (min, max)` from stats.csv.
fn stats_extremes(dir: &Path, scope: &str, quantity: &str) -> Option<(f64, f64)> {
    let mut rd = csv::Reader::from_path(dir.join("stats.csv")).unwrap();
    for r in rd.records() {
        let r = r.unwrap();
        if &r[0] == scope && &r[1] == quantity {
            return Some((r[3].parse().unwrap(), r[9].parse().unwrap()));
        }
    }
    None
}

fn max_abs(dir: &Path, scope: &str, quantities: &[&str]) -> Vec<f64> {
    quantities
        .iter()
        .map(|q| stats_extremes(dir, scope, q).map_or(f64::INFINITY, |(lo, hi)| lo.abs().max(hi.abs())))
        .collect()
}

fn mm(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.2}", 1e3 * x)).collect();
    format!("[{}]", parts.join(", "))
}

const EE: [&str; 3] = ["ee_x", "ee_y", "ee_z"];
const MAV: [&str; 3] = ["mav_x", "mav_y", "mav_z"];

fn delta_round_trip() -> Outcome {
    let t0 = Instant::now();
    let g = ArmGeometry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..10_000 {
        // Reachable targets come from the forward map of random joint angles.
        let theta = JointAngles([0; 3].map(|_| rng.gen_range(-0.4..1.0)));
        let p = forward_kinematics(&theta, &g).unwrap();
        match inverse_kinematics(&p, &g).and_then(|t| forward_kinematics(&t, &g)) {
            Ok(back) => worst = worst.max((back - p).norm()),
            Err(_) => failures += 1,
        }
    }
    // Symmetric pose: all three spheres share the axis, so the tip sits
    // sqrt(l^2 - (R - r + L)^2) below the base. The 5-digit -0.16811 m is
    // this value rounded.
    let home = forward_kinematics(&JointAngles([0.0; 3]), &g).unwrap();
    let reach = g.base_radius - g.platform_radius + g.upper_link;
    let closed_form = Vec3::new(0.0, 0.0, -(g.lower_link.powi(2) - reach.powi(2)).sqrt());
    let home_err = (home - closed_form).norm();
    let rounded_err = (home - Vec3::new(0.0, 0.0, -0.16811)).norm();
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        failures == 0 && worst < 1e-9 && home_err < 1e-6 && rounded_err <= 5e-6 && secs < 1.0,
        format!(
            "max |FK(IK(p)) - p| {worst:.1e} m over 1e4 targets, FK(0) z {:.7} m, {home_err:.1e} from closed form, {rounded_err:.1e} from -0.16811, {secs:.2} s",
            home.z
        ),
    )
}

/// FISTA with gradient restarts on the same regularized box QP.
fn projected_gradient(a: &AllocationMatrix, d: &Vector4<f64>, cfg: &AllocationConfig) -> MotorThrusts {
    let lambda = cfg.regularization;
    let lip = (a.0.transpose() * a.0).symmetric_eigenvalues().max() + lambda;
    let grad = |f: &MotorThrusts| a.0.transpose() * (a.0 * f - d) + lambda * f;
    let clamp = |f: MotorThrusts| f.map(|x| x.clamp(cfg.f_min, cfg.f_max));
    let mut x = MotorThrusts::repeat(0.5 * (cfg.f_min + cfg.f_max));
    let mut y = x;
    let mut t = 1.0f64;
    let mut still = 0;
    for _ in 0..1_000_000 {
        let next = clamp(y - grad(&y) / lip);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if (y - next).dot(&(next - x)) > 0.0 {
            t = 1.0;
            y = next;
        } else {
            y = next + ((t - 1.0) / t_next) * (next - x);
            t = t_next;
        }
        let moved = (next - x).amax();
        x = next;
        still = if moved < 1e-15 { still + 1 } else { 0 };
        if still > 2_000 {
            break;
        }
    }
    x
}

fn allocation_oracle() -> Outcome {
    let t0 = Instant::now();
    let p = VehicleParams::default();
    let a = AllocationMatrix::build(&p).unwrap();
    let cfg = AllocationConfig::from_params(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut saturated = 0;
    for i in 0..500 {
        let scale = if i % 4 == 0 { 5.0 } else { 1.0 };
        let d = Vector4::new(
            rng.gen_range(-1.0..1.0) * scale,
            rng.gen_range(-1.0..1.0) * scale,
            rng.gen_range(-0.1..0.1) * scale,
            rng.gen_range(0.0..70.0),
        );
        let f = solve_allocation(&d, &a, &cfg);
        if f.iter().any(|&x| x <= cfg.f_min || x >= cfg.f_max) {
            saturated += 1;
        }
        worst = worst.max((f - projected_gradient(&a, &d, &cfg)).amax());
    }
    let hover = solve_allocation(&Vector4::new(0.0, 0.0, 0.0, p.hover_thrust()), &a, &cfg);
    let spread = hover.max() - hover.min();
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst < 1e-6 && spread < 1e-9 && saturated > 0 && secs < 10.0,
        format!("max deviation {worst:.1e} N ({saturated} saturating demands), hover spread {spread:.1e} N, {secs:.2} s"),
    )
}

fn integrator_order() -> Outcome {
    let p = VehicleParams::default();
    let far = ContactSurface::vertical(Vec3::new(100.0, 0.0, 0.0), PI, ContactSurface::default().spring_coeff, (0.5, 0.25));
    let mut u = ControlInput::hover(&p);
    u.thrust = 0.0;
    let mut x0 = RigidBodyState::at_rest(Vec3::zeros(), UnitQuat::identity());
    x0.body_rate = Vec3::new(2.0, 0.3, 4.0);
    let integrate = |h: f64, steps: usize| {
        let mut x = x0;
        for _ in 0..steps {
            x = rk4_step(&x, &u, h, &p, &far).unwrap();
        }
        x
    };
    let t_end = 1.0;
    let oracle = integrate(t_end / 12_800.0, 12_800);
    let errors: Vec<f64> = [50, 100, 200, 400].iter().map(|&n| integrate(t_end / n as f64, n).local(&oracle).norm()).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let long = integrate(1e-3, 100_000);
    let norm_err = (long.orientation.into_inner().norm() - 1.0).abs();
    let pass = ratios.iter().all(|&r| r >= 14.0) && norm_err <= 2.0 * f64::EPSILON;
    let r: Vec<String> = ratios.iter().map(|r| format!("{r:.1}")).collect();
    outcome(pass, format!("error ratio per halving [{}], | |q| - 1 | after 1e5 steps {norm_err:.1e}", r.join(", ")))
}

fn hover_equilibrium(tmp: &Path) -> Outcome {
    let mut cfg = bundled("hover.toml");
    cfg.mission.dwell = 5.0;
    let path = write_config(tmp, "hover10.toml", &cfg);
    let out = tmp.join("hover10");
    let (code, _) = run_config(&path, &out);
    if code != 0 {
        return outcome(false, format!("exit code {code}"));
    }
    let log = read_log(&out);
    let err = log.records.iter().map(|r| (r.mav_position() - r.ref_mav_position()).norm()).fold(0.0, f64::max);
    let expected = 2.6 * 9.81;
    let thrust_dev = log.records.iter().map(|r| (r.thrusts().iter().sum::<f64>() / expected - 1.0).abs()).fold(0.0, f64::max);
    let duration = log.records.last().map_or(0.0, |r| r.time);
    outcome(
        duration >= 10.0 && err < 1e-6 && thrust_dev < 0.01,
        format!("{duration:.1} s, max position error {err:.1e} m, thrust within {:.1e} of {expected:.3} N", thrust_dev),
    )
}

fn hover_refs(s: &SlqSolver, p: Vec3) -> Vec<ReferencePoint> {
    let n = s.config().horizon_steps;
    (0..=n).map(|k| ReferencePoint::hover(k as f64 * 0.01, p, UnitQuat::identity(), s.params())).collect()
}

fn gradient_check() -> Outcome {
    let params = VehicleParams::default();
    let surface = ContactSurface::default();
    let ocp = OcpConfig {
        horizon_steps: 10,
        ..OcpConfig::default()
    };
    let s = SlqSolver::new(ocp, GainSet::default(), params.clone(), surface.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        // Half of the problems press the tip a few millimeters into the board.
        let in_contact = case % 2 == 1;
        let face = facing_orientation(&surface);
        let base = if in_contact {
            surface.to_world(&Vec3::new(0.0, 0.0, -0.003)) - face * params.nominal_ee_position
        } else {
            Vec3::new(0.0, 0.0, 1.5)
        };
        let mut refs = hover_refs(&s, base);
        for r in refs.iter_mut() {
            r.orientation = face;
            r.ee_position = r.mav_position + face * params.nominal_ee_position;
            if in_contact {
                r.ee_tracking_enabled = true;
                r.pen_down = true;
                r.contact_force = surface.force_at_depth(0.005);
            }
        }
        let jitter = Vec3::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3));
        let mut x0 = RigidBodyState::at_rest(base + jitter, face);
        x0.velocity = Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), 0.0);
        x0.body_rate = Vec3::new(rng.gen_range(-0.1..0.1), 0.0, rng.gen_range(-0.1..0.1));
        let inputs: Vec<ControlInput> = (0..10)
            .map(|_| {
                let mut u = ControlInput::hover(&params);
                u.moment = Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
                u.thrust += rng.gen_range(-1.0..1.0);
                u.ee_position += Vec3::new(rng.gen_range(-5e-3..5e-3), rng.gen_range(-5e-3..5e-3), rng.gen_range(-5e-3..5e-3));
                u
            })
            .collect();
        let g = s.cost_gradient(&x0, &inputs, &refs).unwrap();
        let h = 1e-6;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..inputs.len() {
            let mut fd = InputVector::zeros();
            for j in 0..INPUT_DIM {
                let mut plus = inputs.clone();
                let mut minus = inputs.clone();
                let mut v = inputs[i].to_vector();
                v[j] += h;
                plus[i] = ControlInput::from_vector(&v);
                v[j] -= 2.0 * h;
                minus[i] = ControlInput::from_vector(&v);
                fd[j] = (s.rollout_cost(&x0, &plus, &refs) - s.rollout_cost(&x0, &minus, &refs)) / (2.0 * h);
            }
            num += (g[i] - fd).norm_squared();
            den += fd.norm_squared();
        }
        worst = worst.max((num / den).sqrt());
    }
    outcome(worst < 1e-4, format!("max relative gradient error {worst:.1e} over 10 problems (5 in contact)"))
}

fn rss_mission(tmp: &Path) -> (Outcome, Outcome, Outcome, Outcome) {
    let out = tmp.join("rss");
    let t0 = Instant::now();
    let (code, stdout) = run_config(&configs().join("rss.toml"), &out);
    let secs = t0.elapsed().as_secs_f64();
    if code != 0 {
        let f = || outcome(false, format!("rss run exited with {code}"));
        return (f(), f(), f(), f());
    }
    let log = read_log(&out);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();

    let violations = log
        .records
        .iter()
        .filter(|r| r.cost > r.hover_cost || r.warm_cost.is_some_and(|w| r.cost > w))
        .count();
    let descent = outcome(violations == 0, format!("{violations} of {} RSS ticks violate descent", log.records.len()));

    let ee = max_abs(&out, "contact", &EE);
    let mav = max_abs(&out, "contact", &MAV);
    let visual = stats_extremes(&out, "visual", "nearest_neighbor").map_or(f64::INFINITY, |(_, hi)| hi);
    let segments = report.lines().any(|l| l.starts_with("contact segments: 4 "));
    let ceilings = outcome(
        ee.iter().all(|&e| e <= 10e-3) && mav.iter().all(|&e| e <= 40e-3) && visual < 10e-3 && segments && secs < 300.0,
        format!(
            "max |e| ee {} mm, mav {} mm, visual max {:.2} mm, 4 contact segments: {segments}, {secs:.0} s",
            mm(&ee),
            mm(&mav),
            1e3 * visual
        ),
    );

    let recs = &log.records;
    let first_contact = recs.iter().position(|r| r.fc_true > 0.0);
    let first_predicted = recs.iter().position(|r| r.horizon_fc_max > 0.0);
    // Touchdowns while the reference tip moves toward the board must be
    // predicted one tick ahead; touches while it retracts are only counted.
    let surface = bundled("rss.toml").surface();
    let ref_height = |k: usize| surface.to_surface(&recs[k].ref_ee_position()).z;
    let onsets: Vec<usize> = (1..recs.len()).filter(|&k| recs[k].fc_true > 0.0 && recs[k - 1].fc_true <= 0.0).collect();
    let (approach, retract): (Vec<usize>, Vec<usize>) = onsets.iter().partition(|&&k| ref_height(k) < ref_height(k - 1));
    let unannounced = approach.iter().filter(|&&k| recs[k - 1].horizon_fc_max <= 0.0).count();
    let anticipation = outcome(
        matches!((first_predicted, first_contact), (Some(p), Some(c)) if p < c) && !approach.is_empty() && unannounced == 0,
        format!(
            "first predicted contact tick {first_predicted:?}, first real contact tick {first_contact:?}, {} approach onsets ({unannounced} unpredicted), {} onsets while retracting",
            approach.len(),
            retract.len()
        ),
    );

    let median = stdout
        .lines()
        .find_map(|l| l.strip_prefix("controller cycle: median ")?.strip_suffix(" ms")?.parse::<f64>().ok())
        .unwrap_or(f64::NAN);
    let perf = outcome(median <= 10.0, format!("median controller cycle {median:.2} ms at N = 200 (budget 10 ms, reported only)"));
    (descent, ceilings, anticipation, perf)
}

fn sweep_csv(dir: &Path) -> Vec<csv::StringRecord> {
    let mut rd = csv::Reader::from_path(dir.join("sweep.csv")).unwrap();
    rd.records().map(|r| r.unwrap()).collect()
}

fn column(rec: &csv::StringRecord, headers: &csv::StringRecord, name: &str) -> f64 {
    let i = headers.iter().position(|h| h == name).unwrap();
    rec[i].parse().unwrap_or(f64::INFINITY)
}

fn sweep_headers(dir: &Path) -> csv::StringRecord {
    csv::Reader::from_path(dir.join("sweep.csv")).unwrap().headers().unwrap().clone()
}

fn run_sweep(config: &Path, axis: &str, values: &[String], out: &Path) -> i32 {
    let values = values.join(",");
    aerowrite(&["sweep", config.to_str().unwrap(), "--axis", axis, "--values", &values, "--out-dir", out.to_str().unwrap(), "--seed", "11"]).0
}

fn row_max_abs(rec: &csv::StringRecord, h: &csv::StringRecord, q: &str) -> f64 {
    column(rec, h, &format!("{q}_min")).abs().max(column(rec, h, &format!("{q}_max")).abs())
}

fn velocity_sweep(tmp: &Path) -> Outcome {
    let t0 = Instant::now();
    let out = tmp.join("velocity");
    let values: Vec<String> = VelocityProfile::sweep().iter().map(|p| format!("{}:{}", p.v_max, p.a_max)).collect();
    let code = run_sweep(&configs().join("hello.toml"), "velocity", &values, &out);
    let rows = sweep_csv(&out);
    let h = sweep_headers(&out);
    let mut pass = code == 0 && rows.len() == 5;
    let mut parts = Vec::new();
    for r in &rows {
        let ee = EE.map(|q| row_max_abs(r, &h, q));
        let mav = MAV.map(|q| row_max_abs(r, &h, q));
        pass &= &r[5] == "ok" && ee.iter().all(|&e| e < 10e-3) && mav.iter().all(|&e| e < 50e-3);
        parts.push(format!("v {} ee {} mav {}", &r[1], mm(&ee), mm(&mav)));
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs < 1200.0;
    outcome(pass, format!("{} ({secs:.0} s)", parts.join("; ")))
}

fn size_sweep(tmp: &Path) -> Outcome {
    let t0 = Instant::now();
    let out = tmp.join("size");
    let values: Vec<String> = ["0.1", "0.2", "0.3", "0.4"].map(String::from).to_vec();
    let code = run_sweep(&configs().join("rss.toml"), "size", &values, &out);
    let rows = sweep_csv(&out);
    let h = sweep_headers(&out);
    let mut pass = code == 0 && rows.len() == 4;
    let mut parts = Vec::new();
    for r in &rows {
        let v = column(r, &h, "visual_max");
        pass &= &r[5] == "ok" && v < 10e-3;
        parts.push(format!("h {} m: visual max {:.2} mm, mean {:.2} mm", &r[3], 1e3 * v, 1e3 * column(r, &h, "visual_mean")));
    }
    outcome(pass, format!("{} ({:.0} s)", parts.join("; "), t0.elapsed().as_secs_f64()))
}

fn determinism(tmp: &Path) -> Outcome {
    let cfg = MissionConfig {
        mission: MissionSection {
            text: Some("L".into()),
            height: 0.1,
            home_distance: 0.06,
            dwell: 0.5,
            ..MissionSection::default()
        },
        profile: ProfileSection { v_max: 0.1, a_max: 0.1 },
        ..MissionConfig::default()
    };
    let mut cfg = cfg;
    cfg.plant.seed = 1234;
    let path = write_config(tmp, "determinism.toml", &cfg);
    // Same output directory both times, since it is part of the written config.
    let out = tmp.join("det");
    let files = ["log.csv", "stats.csv", "overlay.svg", "report.txt", "config.toml"];
    let snapshot = || files.map(|f| fs::read(out.join(f)).unwrap_or_default());
    let first_code = run_config(&path, &out).0;
    let first = snapshot();
    let _ = fs::remove_dir_all(&out);
    let codes = (first_code, run_config(&path, &out).0);
    if codes != (0, 0) {
        return outcome(false, format!("exit codes {codes:?}"));
    }
    let second = snapshot();
    let differing: Vec<&str> = (0..files.len()).filter(|&i| first[i] != second[i]).map(|i| files[i]).collect();
    let bytes = first[0].len();
    outcome(differing.is_empty(), format!("two runs, seed 1234: {} files compared, differing {differing:?}, log {bytes} bytes", files.len()))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let mut lines: Vec<(u8, &str, bool, Outcome)> = vec![
        (1, "delta kinematics round trip", true, delta_round_trip()),
        (2, "allocation oracle equivalence", true, allocation_oracle()),
        (3, "integrator order", true, integrator_order()),
        (4, "hover equilibrium", true, hover_equilibrium(t)),
        (5, "solver gradient", true, gradient_check()),
    ];
    let (descent, ceilings, anticipation, perf) = rss_mission(t);
    lines.push((5, "per-cycle descent on RSS", true, descent));
    lines.push((6, "RSS mission ceilings", true, ceilings));
    lines.push((7, "velocity sweep", true, velocity_sweep(t)));
    lines.push((8, "size sweep", true, size_sweep(t)));
    lines.push((9, "contact anticipation", true, anticipation));
    lines.push((10, "performance envelope", false, perf));
    lines.push((11, "determinism", true, determinism(t)));

    let mut failed = 0;
    for (id, name, gated, o) in &lines {
        let status = match (gated, o.pass) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "PASS (soft)",
            (false, false) => "OVER (soft)",
        };
        if *gated && !o.pass {
            failed += 1;
        }
        println!("criterion {id:>2} {status}: {name}: {}", o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria met");
}
