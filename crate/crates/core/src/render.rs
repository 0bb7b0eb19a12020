//! Cluster snapshots and their SVG and CSV artifacts.
//!
//! The cluster at time `t` is drawn as the image of a real-axis grid under
//! the forward map; past slits show up as excursions of that curve. The
//! particle at the log's injected arrival and any requested fingers are
//! overlaid. Rendering never feeds back into the simulation.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{EngineOptions, FingerPath, ParticleRecord, Process, DEFAULT_ARC_SAMPLES};
use crate::error::{Result, ShlError};
use crate::events::EventLog;
use crate::kernel::HalfPlanePoint;

/// Uniform points of the default boundary grid.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Refinement factor of grid cells near an event base.
pub const GRID_DENSIFY: usize = 8;
/// Distance from an event base within which cells are refined.
pub const GRID_DENSIFY_RADIUS: f64 = 2.0;
/// Significant digits of coordinates written to SVG.
pub const SVG_DIGITS: i32 = 9;

pub const CSV_HEADER: &str = "grid_x,re,im";

const FINGER_COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    pub time: f64,
    pub grid: Vec<f64>,
    pub boundary_polyline: Vec<HalfPlanePoint<f64>>,
    /// Grid indices whose image left the trusted window; their values come
    /// from the unguarded map.
    pub flagged: Vec<usize>,
    pub particles: Option<Vec<ParticleRecord<f64>>>,
    pub fingers: Option<Vec<FingerPath<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotOptions {
    pub engine: EngineOptions,
    /// Draw the particle at the injected arrival, if it is attached by `t`.
    pub particle: bool,
    pub arc_samples: usize,
    pub finger_anchors: Vec<f64>,
    pub finger_nodes: usize,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        Self {
            engine: EngineOptions::compensated(),
            particle: true,
            arc_samples: DEFAULT_ARC_SAMPLES,
            finger_anchors: Vec::new(),
            finger_nodes: 65,
        }
    }
}

/// `points` uniform nodes on `[-window/2, window/2]`, with every cell within
/// [`GRID_DENSIFY_RADIUS`] of an event base split [`GRID_DENSIFY`] ways.
pub fn default_grid(log: &EventLog, points: usize) -> Vec<f64> {
    assert!(points >= 2, "grid needs at least two points");
    let half = 0.5 * log.window();
    let step = 2.0 * half / (points - 1) as f64;
    let mut bases: Vec<f64> = log.events().iter().map(|e| e.x).collect();
    bases.sort_by(f64::total_cmp);
    let near = |lo: f64, hi: f64| {
        let i = bases.partition_point(|&b| b < lo - GRID_DENSIFY_RADIUS);
        bases.get(i).is_some_and(|&b| b <= hi + GRID_DENSIFY_RADIUS)
    };
    let node = |k: usize| -half + step * k as f64;
    let mut grid = Vec::with_capacity(points * 2);
    for k in 0..points - 1 {
        let (lo, hi) = (node(k), node(k + 1));
        grid.push(lo);
        if near(lo, hi) {
            for j in 1..GRID_DENSIFY {
                grid.push(lo + (hi - lo) * j as f64 / GRID_DENSIFY as f64);
            }
        }
    }
    grid.push(half);
    grid
}

/// Forward image of `grid` at time `t`, with optional overlays.
pub fn snapshot(log: &EventLog, t: f64, grid: &[f64], options: &SnapshotOptions) -> Result<ClusterSnapshot> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ShlError::InvalidArgument("grid must be non-empty and strictly increasing".into()));
    }
    if !(t >= 0.0 && t <= log.horizon()) {
        return Err(ShlError::InvalidArgument(format!("time {t} outside [0, {}]", log.horizon())));
    }
    let guarded = Process::with_options(log, options.engine);
    let free = Process::with_options(log, options.engine.unguarded());
    let mapped = grid
        .par_iter()
        .map(|&x| {
            let z = HalfPlanePoint::real(x);
            match guarded.forward_evaluate(z, t) {
                Ok(v) => Ok((v, false)),
                Err(ShlError::WindowExceeded { .. }) => free.forward_evaluate(z, t).map(|v| (v, true)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let flagged = mapped.iter().enumerate().filter(|(_, m)| m.1).map(|(i, _)| i).collect();
    let boundary_polyline = mapped.into_iter().map(|m| m.0).collect();

    let particles = match log.injected() {
        Some(e) if options.particle && e.t <= t => Some(vec![free.particle_at(e.t, e.x, options.arc_samples)?]),
        _ => None,
    };
    let fingers = if options.finger_anchors.is_empty() {
        None
    } else {
        let nodes = options.finger_nodes.max(2);
        let s_grid: Vec<f64> = if t == 0.0 {
            vec![0.0]
        } else {
            (0..nodes).map(|k| t * k as f64 / (nodes - 1) as f64).collect()
        };
        Some(
            options
                .finger_anchors
                .iter()
                .map(|&a| free.finger_path(a, t, &s_grid))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    Ok(ClusterSnapshot {
        time: t,
        grid: grid.to_vec(),
        boundary_polyline,
        flagged,
        particles,
        fingers,
    })
}

/// `v` with [`SVG_DIGITS`] significant digits, trailing zeros removed.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { format!("{v}") };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (SVG_DIGITS - 1 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn points_attr<'a>(pts: impl Iterator<Item = &'a HalfPlanePoint<f64>>) -> String {
    let mut out = String::new();
    for (i, p) in pts.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{},{}", format_sig(p.re), format_sig(-p.im));
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG document for the snapshot. `metadata` is embedded verbatim (escaped)
/// in a `<metadata>` element.
pub fn render_svg(s: &ClusterSnapshot, metadata: Option<&str>) -> Result<String> {
    if s.boundary_polyline.is_empty() {
        return Err(ShlError::InvalidArgument("snapshot is empty".into()));
    }
    let mut all: Vec<&HalfPlanePoint<f64>> = s.boundary_polyline.iter().collect();
    for p in s.particles.iter().flatten() {
        all.extend(&p.image_polyline);
    }
    for f in s.fingers.iter().flatten() {
        all.extend(f.nodes.iter().map(|n| &n.1));
    }
    let (mut x0, mut x1, mut top) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for p in &all {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        top = top.max(p.im);
    }
    let width = (x1 - x0).max(1e-9);
    let pad = 0.02 * width.max(top);
    let (vx, vy, vw, vh) = (x0 - pad, -top - pad, width + 2.0 * pad, top + 2.0 * pad);
    let stroke = format_sig(vw.max(vh) / 1500.0);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\" \
         width=\"{}\" height=\"{}\" preserveAspectRatio=\"xMidYMid meet\">",
        format_sig(vx),
        format_sig(vy),
        format_sig(vw),
        format_sig(vh),
        1000,
        format_sig((1000.0 * vh / vw).max(1.0).round()),
    );
    let _ = writeln!(out, "<title>cluster at t = {}</title>", format_sig(s.time));
    if let Some(m) = metadata {
        let _ = writeln!(out, "<metadata>{}</metadata>", escape(m));
    }
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"#000000\" stroke-width=\"{stroke}\" stroke-linejoin=\"round\" points=\"{}\"/>",
        points_attr(s.boundary_polyline.iter())
    );
    for p in s.particles.iter().flatten() {
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"#e377c2\" stroke-width=\"{stroke}\" points=\"{}\"/>",
            points_attr(p.image_polyline.iter())
        );
    }
    for (k, f) in s.fingers.iter().flatten().enumerate() {
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{stroke}\" points=\"{}\"/>",
            FINGER_COLORS[k % FINGER_COLORS.len()],
            points_attr(f.nodes.iter().map(|n| &n.1))
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(s: &ClusterSnapshot, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_svg(s, None)?)?;
    Ok(())
}

/// Writes `grid_x,re,im` rows in shortest round-trip decimal form.
pub fn write_csv<W: Write>(s: &ClusterSnapshot, mut w: W) -> Result<()> {
    if s.boundary_polyline.is_empty() {
        return Err(ShlError::InvalidArgument("snapshot is empty".into()));
    }
    let mut buf = String::with_capacity(40 * s.grid.len());
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for (x, p) in s.grid.iter().zip(&s.boundary_polyline) {
        let _ = writeln!(buf, "{x:?},{:?},{:?}", p.re, p.im);
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn emit_csv(s: &ClusterSnapshot, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_csv(s, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Rows of a CSV written by [`write_csv`].
pub fn read_csv<R: Read>(r: R) -> Result<Vec<(f64, HalfPlanePoint<f64>)>> {
    let mut lines = BufReader::new(r).lines();
    match lines.next() {
        Some(Ok(h)) if h == CSV_HEADER => {}
        _ => return Err(ShlError::Format(format!("missing `{CSV_HEADER}` header"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let parse = |f: Option<&str>| -> Result<f64> {
            f.and_then(|v| v.parse().ok())
                .ok_or_else(|| ShlError::Format(format!("bad CSV row {}: `{line}`", i + 2)))
        };
        let mut it = line.split(',');
        let x = parse(it.next())?;
        let re = parse(it.next())?;
        let im = parse(it.next())?;
        rows.push((x, HalfPlanePoint::new(re, im)?));
    }
    Ok(rows)
}

/// Rebuilds the boundary part of a snapshot from its CSV.
pub fn import_csv(path: impl AsRef<Path>, time: f64) -> Result<ClusterSnapshot> {
    let rows = read_csv(std::fs::File::open(path)?)?;
    Ok(ClusterSnapshot {
        time,
        grid: rows.iter().map(|r| r.0).collect(),
        boundary_polyline: rows.into_iter().map(|r| r.1).collect(),
        flagged: Vec::new(),
        particles: None,
        fingers: None,
    })
}
