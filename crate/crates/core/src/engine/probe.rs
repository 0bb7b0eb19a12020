//! Window coupling probe and the δ-rescaled forward map.

use serde::{Deserialize, Serialize};

use super::{EngineOptions, Process};
use crate::error::{Result, ShlError};
use crate::events::{sample_events, EventLog};
use crate::kernel::HalfPlanePoint;
use crate::scalar::Real;

/// Equispaced times in the probe grid, on top of the smaller window's events.
pub const PROBE_GRID_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeStep {
    pub n: f64,
    pub m: f64,
    pub sup_diff: f64,
}

impl<'a> Process<'a> {
    /// `δ F_{t/δ}(z/δ)`.
    pub fn rescaled_forward<T: Real>(&self, delta: f64, z: HalfPlanePoint<T>, t: f64) -> Result<HalfPlanePoint<T>> {
        if !(delta > 0.0) {
            return Err(ShlError::NonPositiveLength(delta));
        }
        let d = T::lit(delta);
        let v = self.forward_evaluate(HalfPlanePoint::from_complex(z.to_complex() / d), t / delta)?;
        Ok(HalfPlanePoint::from_complex(v.to_complex() * d))
    }
}

pub fn rescaled_forward<T: Real>(log: &EventLog, delta: f64, z: HalfPlanePoint<T>, t: f64) -> Result<HalfPlanePoint<T>> {
    Process::new(log).rescaled_forward(delta, z, t)
}

fn probe_grid(log: &EventLog, t: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..PROBE_GRID_POINTS)
        .map(|k| t * k as f64 / (PROBE_GRID_POINTS - 1) as f64)
        .collect();
    grid.extend(log.events()[..log.count_until(t)].iter().map(|e| e.t));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Sup over a time grid of the distance between the literal windowed backward
/// paths for each adjacent pair of windows, all filtered from one sample at
/// the largest window.
pub fn window_convergence_probe(
    z: HalfPlanePoint<f64>,
    t: f64,
    windows: &[f64],
    seed: u64,
) -> Result<Vec<ProbeStep>> {
    if windows.is_empty() || windows.windows(2).any(|w| w[1] < w[0]) || !(windows[0] > 0.0) {
        return Err(ShlError::InvalidArgument("windows must be positive and sorted".into()));
    }
    let largest = *windows.last().unwrap();
    let log = sample_events(t, largest, seed)?;
    let opts = EngineOptions::default().unguarded();
    windows
        .windows(2)
        .map(|pair| {
            let (n, m) = (pair[0], pair[1]);
            let small = log.filter_window(n);
            let big = log.filter_window(m);
            let grid = probe_grid(&small, t);
            let a = Process::with_options(&small, opts).backward_evaluate(z, &grid)?;
            let b = Process::with_options(&big, opts).backward_evaluate(z, &grid)?;
            let sup_diff = a
                .samples
                .iter()
                .zip(&b.samples)
                .map(|(p, q)| (p.1.to_complex() - q.1.to_complex()).norm())
                .fold(0.0, f64::max);
            Ok(ProbeStep { n, m, sup_diff })
        })
        .collect()
}
