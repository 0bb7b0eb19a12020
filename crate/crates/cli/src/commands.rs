use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use shl_core::experiments::{Param, EXPERIMENTS};
use shl_core::render::{default_grid, render_svg, snapshot, write_csv, SnapshotOptions};
use shl_core::{
    quad_drift, quad_inverse_l2, quad_l2_displacement, run_experiment, sample_events, slit_forward, slit_inverse,
    EngineOptions, EventLog, ExperimentSpec, Point, ShlError, Slit, TailMode, Verdict, VERSION,
};

use crate::config::RunConfig;
use crate::CliError;

const MANIFEST_SCHEMA: &str = "shl-manifest/1";

fn label(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(cfg.str_or("out", "shl-out")?);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn engine_options(cfg: &RunConfig) -> Result<EngineOptions, CliError> {
    let tail = match cfg.str_or("tail", "compensated")?.as_str() {
        "compensated" => TailMode::Compensated,
        "truncated" => TailMode::Truncated,
        other => return Err(CliError::Usage(format!("tail must be compensated or truncated, got `{other}`"))),
    };
    Ok(EngineOptions::default().with_tail(tail))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    artifacts: &[(&str, String)],
    extra: Value,
) -> Result<(), CliError> {
    let list: Vec<Value> = artifacts.iter().map(|(k, p)| json!({ "kind": k, "path": p })).collect();
    let mut doc = json!({
        "schema": MANIFEST_SCHEMA,
        "version": VERSION,
        "command": command,
        "config": cfg.to_json(),
        "artifacts": list,
    });
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&doc).unwrap() + "\n")?;
    Ok(())
}

struct Row {
    name: &'static str,
    value: f64,
    target: f64,
    tolerance: f64,
    passed: bool,
}

impl Row {
    fn new(name: &'static str, value: f64, target: f64, tolerance: f64) -> Self {
        let passed = (value - target).abs() <= tolerance;
        Self {
            name,
            value,
            target,
            tolerance,
            passed,
        }
    }
}

/// Largest `|g(z) - h(z)| / (1 + |z|)` over random upper half-plane points.
fn max_relative(points: u64, seed: u64, f: impl Fn(Point, f64) -> (Complex64, Complex64)) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let re = rng.random_range(-50.0..50.0);
        let im = 10f64.powf(rng.random_range(-6.0..3.0));
        let x = rng.random_range(-10.0..10.0);
        let z = Point::new(re, im).expect("sampled above the axis");
        let (a, b) = f(z, x);
        worst = worst.max((a - b).norm() / (1.0 + z.to_complex().norm()));
    }
    worst
}

pub fn kernel_check(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    cfg.reject_unknown(&["points", "seed"])?;
    let points = cfg.u64_or("points", 1_000_000)?;
    let seed = cfg.u64_or("seed", 1)?;
    let i = Complex64::new(0.0, 1.0);
    let n = 1000.0;
    let mut rows = Vec::new();

    let drift = quad_drift(i, n)?.value;
    let bound = PI / n;
    rows.push(Row::new("drift re (z=i, n=1000)", drift.re, 0.0, bound));
    rows.push(Row::new("drift im (z=i, n=1000)", drift.im, FRAC_PI_2, bound));
    let mirrored = quad_drift(Complex64::new(-1.5, 0.5), 100.0)?.value;
    let direct = quad_drift(Complex64::new(1.5, 0.5), 100.0)?.value;
    rows.push(Row::new("drift mirror symmetry", (direct + mirrored.conj()).norm(), 0.0, 1e-9));
    rows.push(Row::new("inverse L2 integral", quad_inverse_l2()?.value.re, 4.0 / 3.0, 1e-6));
    let l0 = quad_l2_displacement(Complex64::new(0.0, 0.7))?.value.re;
    let l1 = quad_l2_displacement(Complex64::new(3.25, 0.7))?.value.re;
    rows.push(Row::new("L2 displacement shift invariance", l1 - l0, 0.0, 1e-9));

    let round_trip = max_relative(points, seed, |z, x| {
        let p = Slit::unit(x);
        (slit_inverse(p, slit_forward(p, z)).to_complex(), z.to_complex())
    });
    rows.push(Row::new("round trip max err/(1+|z|)", round_trip, 0.0, 1e-10));
    let shift = max_relative(points.min(100_000), seed + 1, |z, x| {
        let a = slit_forward(Slit::unit(x), z).to_complex();
        let moved = Point::new(z.re - x, z.im).unwrap();
        (a, slit_forward(Slit::unit(0.0), moved).to_complex() + x)
    });
    rows.push(Row::new("shift covariance", shift, 0.0, 1e-12));
    let mirror = max_relative(points.min(100_000), seed + 2, |z, _| {
        let a = slit_forward(Slit::unit(0.0), z).to_complex();
        let m = slit_forward(Slit::unit(0.0), Point::new(-z.re, z.im).unwrap()).to_complex();
        (a, -m.conj())
    });
    rows.push(Row::new("mirror symmetry", mirror, 0.0, 1e-12));

    println!("{:<34} {:>24} {:>24} {:>10}  result", "check", "value", "target", "tolerance");
    for r in &rows {
        println!(
            "{:<34} {:>24.16e} {:>24.16e} {:>10.1e}  {}",
            r.name,
            r.value,
            r.target,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let all = rows.iter().all(|r| r.passed);
    if cfg.has("out") {
        let dir = out_dir(cfg)?;
        let table: Vec<Value> = rows
            .iter()
            .map(|r| json!({"name": r.name, "value": r.value, "target": r.target, "tolerance": r.tolerance, "passed": r.passed}))
            .collect();
        let doc = json!({"version": VERSION, "config": cfg.to_json(), "checks": table, "passed": all});
        fs::write(dir.join("kernel-check.json"), serde_json::to_string_pretty(&doc).unwrap() + "\n")?;
        write_manifest(&dir, "kernel-check", cfg, &[("kernel-check", "kernel-check.json".into())], json!({}))?;
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Writes SVG and CSV snapshots of `log` at each time. Returns the artifact
/// list and the flagged grid points, as `(edge, central)` counts; central
/// points start within a quarter window of the origin.
fn write_snapshots(
    log: &EventLog,
    times: &[f64],
    cfg: &RunConfig,
    dir: &Path,
    stem: &str,
) -> Result<(Vec<(&'static str, String)>, (usize, usize)), CliError> {
    let points = cfg.u64_or("grid_points", shl_core::render::DEFAULT_GRID_POINTS as u64)? as usize;
    if points < 2 {
        return Err(CliError::Usage("grid_points must be at least 2".into()));
    }
    let opts = SnapshotOptions {
        engine: engine_options(cfg)?,
        particle: cfg.str_or("particle", "on")? != "off",
        finger_anchors: cfg.list_or("finger_anchors", Vec::new())?,
        finger_nodes: cfg.u64_or("finger_nodes", 65)? as usize,
        ..SnapshotOptions::default()
    };
    let grid = default_grid(log, points);
    let mut artifacts = Vec::new();
    let mut flagged = (0, 0);
    for &t in times {
        let snap = snapshot(log, t, &grid, &opts)?;
        for &i in &snap.flagged {
            if grid[i].abs() <= 0.25 * log.window() {
                flagged.1 += 1;
            } else {
                flagged.0 += 1;
            }
        }
        let meta = json!({"version": VERSION, "time": t, "config": cfg.to_json()}).to_string();
        let svg = format!("{stem}_t{}.svg", label(t));
        let csv = format!("{stem}_t{}.csv", label(t));
        fs::write(dir.join(&svg), render_svg(&snap, Some(&meta))?)?;
        let mut buf = Vec::new();
        write_csv(&snap, &mut buf)?;
        fs::write(dir.join(&csv), buf)?;
        artifacts.push(("svg", svg));
        artifacts.push(("csv", csv));
    }
    Ok((artifacts, flagged))
}

fn check_times(times: &[f64], horizon: f64) -> Result<(), CliError> {
    if times.is_empty() || times.iter().any(|&t| !(t >= 0.0 && t <= horizon)) {
        return Err(CliError::Usage(format!("times must lie in [0, {horizon}]")));
    }
    Ok(())
}

/// Escapes near the grid edge are expected and only reported; an escape
/// from the central half means the picture itself is untrustworthy.
fn warn_flagged((edge, central): (usize, usize), window: f64) -> ExitCode {
    if edge > 0 {
        eprintln!("warning: {edge} boundary points near the grid edge left the trusted window");
    }
    if central == 0 {
        return ExitCode::SUCCESS;
    }
    eprintln!(
        "error: {central} central boundary points left the trusted window; rerun with --window {}",
        label(2.0 * window)
    );
    ExitCode::from(1)
}

pub fn simulate(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    cfg.reject_unknown(&[
        "seed",
        "horizon",
        "window",
        "times",
        "grid_points",
        "tail",
        "z_re",
        "inject_t",
        "inject_x",
        "particle",
        "finger_anchors",
        "finger_nodes",
    ])?;
    let start = Instant::now();
    let seed = cfg.u64_or("seed", 7)?;
    let horizon = cfg.f64_or("horizon", 10.0)?;
    let window = cfg.f64_or("window", 100.0)?;
    let z_re = cfg.f64_or("z_re", 0.0)?;
    let floor = f64::max(4.0, 2.0 * z_re.abs());
    if !(window >= floor) {
        return Err(ShlError::WindowTooSmall { window, floor }.into());
    }
    let times = cfg.list_or("times", vec![horizon])?;
    check_times(&times, horizon)?;
    let mut log = sample_events(horizon, window, seed)?;
    if cfg.has("inject_t") {
        log = log.inject_point(cfg.f64_or("inject_t", 0.0)?, cfg.f64_or("inject_x", 0.0)?)?;
    }
    let dir = out_dir(cfg)?;
    log.save(dir.join("events.bin"))?;
    let mut artifacts = vec![("event-log", "events.bin".to_string())];
    let (snaps, flagged) = write_snapshots(&log, &times, cfg, &dir, "snapshot")?;
    artifacts.extend(snaps);
    write_manifest(
        &dir,
        "simulate",
        cfg,
        &artifacts,
        json!({"seed": seed, "events": log.len(), "flagged_points": flagged.0 + flagged.1, "central_flagged_points": flagged.1, "runtime_seconds": start.elapsed().as_secs_f64()}),
    )?;
    println!("wrote {} artifacts to {}", artifacts.len() + 1, dir.display());
    Ok(warn_flagged(flagged, window))
}

pub fn render(cfg: &RunConfig) -> Result<ExitCode, CliError> {
    cfg.reject_unknown(&["log", "times", "grid_points", "tail", "particle", "finger_anchors", "finger_nodes"])?;
    if !cfg.has("log") {
        return Err(CliError::Usage("render needs --set log=<path to an event log>".into()));
    }
    let start = Instant::now();
    let path = cfg.str_or("log", "")?;
    let log = EventLog::load(&path).map_err(|e| match e {
        ShlError::Io(m) => CliError::Usage(format!("cannot read {path}: {m}")),
        other => other.into(),
    })?;
    let times = cfg.list_or("times", vec![log.horizon()])?;
    check_times(&times, log.horizon())?;
    let dir = out_dir(cfg)?;
    let (artifacts, flagged) = write_snapshots(&log, &times, cfg, &dir, "render")?;
    write_manifest(
        &dir,
        "render",
        cfg,
        &artifacts,
        json!({"seed": log.seed(), "flagged_points": flagged.0 + flagged.1, "central_flagged_points": flagged.1, "runtime_seconds": start.elapsed().as_secs_f64()}),
    )?;
    println!("wrote {} artifacts to {}", artifacts.len() + 1, dir.display());
    Ok(warn_flagged(flagged, log.window()))
}

/// Default campaign for `name` with the config applied on top.
pub fn experiment_spec(name: &str, cfg: &RunConfig) -> Result<ExperimentSpec, CliError> {
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::Usage(format!(
            "unknown experiment `{name}`; choose one of {}",
            EXPERIMENTS.join(", ")
        )));
    }
    let mut spec = ExperimentSpec::default_for(name)?;
    for key in cfg.keys() {
        let value = cfg.get(key).unwrap();
        match key {
            "out" | "threads" => {}
            "seed" => spec.base_seed = cfg.u64_or("seed", 0)?,
            "replicas" => spec.replicas = cfg.u64_or("replicas", 0)? as usize,
            _ => {
                let target = if key == "horizon" { "t" } else { key };
                if !spec.has(target) && target != "window" {
                    let known: Vec<&str> = spec.params.keys().map(String::as_str).collect();
                    return Err(CliError::Usage(format!(
                        "`{key}` is not a parameter of {name}; parameters: seed, replicas, {}",
                        known.join(", ")
                    )));
                }
                let p: Param = crate::config::to_param(value)
                    .ok_or_else(|| CliError::Usage(format!("`{key}` has an unsupported value type")))?;
                spec.set(target, p);
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

pub fn experiment(name: &str, cfg: &RunConfig) -> Result<ExitCode, CliError> {
    let spec = experiment_spec(name, cfg)?;
    let report = run_experiment(&spec)?;
    let dir = out_dir(cfg)?;
    let file = format!("{name}.json");
    fs::write(dir.join(&file), report.to_json() + "\n")?;
    write_manifest(
        &dir,
        "experiment",
        cfg,
        &[("report", file.clone())],
        json!({"seed": spec.base_seed, "experiment": name, "verdict": report.verdict, "runtime_seconds": report.runtime_seconds}),
    )?;
    println!("{name}: {:?} ({} replicas, {:.1} s)", report.verdict, report.replicas, report.runtime_seconds);
    for c in &report.checks {
        let status = match c.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        let target = c.target.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into());
        println!(
            "  {:<32} {:>14.6} ± {:<10.4} target {:>12}  {:?}  {status}",
            c.name, c.estimate, c.stderr, target, c.rule
        );
    }
    println!("report: {}", dir.join(&file).display());
    Ok(match report.verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Diagnostic => {
            eprintln!("warning: {name} is a diagnostic without a pass threshold");
            ExitCode::SUCCESS
        }
        Verdict::Fail => ExitCode::from(1),
    })
}
