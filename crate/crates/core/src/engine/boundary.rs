//! Real-line flows: the inverse boundary flow `a ↦ F_t^{-1}(a)`, harmonic
//! measure of an interval, the real finger flow and finger paths.

use serde::{Deserialize, Serialize};

use super::{check_times, Process, TracerKind, TracerPath};
use crate::error::{Result, ShlError};
use crate::events::{EventLog, SlitEvent};
use crate::kernel::{unit_inverse_real, unit_real_projection, HalfPlanePoint};
use crate::scalar::Real;

/// Finger from the boundary to the tip `F_t(a)`, sampled at `s` in `[0, t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerPath<T> {
    pub tip_time: f64,
    pub anchor: T,
    pub nodes: Vec<(f64, HalfPlanePoint<T>)>,
}

/// Arrivals that landed on the preimage of a boundary interval, with the
/// running harmonic measure of that interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAttachments {
    pub attached: Vec<SlitEvent>,
    /// `∫_0^t H(s) ds` by the trapezoid rule between consecutive arrivals.
    pub h_integral: f64,
    /// `H(t)` at the end of the window.
    pub h_final: f64,
}

impl IntervalAttachments {
    pub fn count(&self) -> usize {
        self.attached.len()
    }
}

fn check_span(s: f64, t: f64, horizon: f64) -> Result<()> {
    if !(s >= 0.0 && s <= t && t <= horizon) {
        return Err(ShlError::InvalidArgument(format!(
            "need 0 <= s <= t <= {horizon}, got s = {s}, t = {t}"
        )));
    }
    Ok(())
}

impl<'a> Process<'a> {
    /// One inverse step across the gap `dt` followed by the slit at `e`.
    #[inline]
    fn inverse_step<T: Real>(&self, a: T, dt: f64, x: f64) -> T {
        unit_inverse_real(T::lit(x), self.drift_real_inverse(a, dt))
    }

    /// `F_t^{-1}(a)` sampled at each requested time.
    pub fn inverse_boundary_flow<T: Real>(&self, a: T, sample_times: &[f64]) -> Result<TracerPath<T>> {
        check_times(sample_times, self.log.horizon())?;
        let events = self.log.events();
        let mut cur = a;
        let mut now = 0.0;
        let mut next = 0;
        let mut samples = Vec::with_capacity(sample_times.len());
        for &ts in sample_times {
            while next < events.len() && events[next].t <= ts {
                let e = events[next];
                cur = self.inverse_step(cur, e.t - now, e.x);
                now = e.t;
                next += 1;
            }
            let at = self.drift_real_inverse(cur, ts - now);
            samples.push((ts, HalfPlanePoint::real(at)));
        }
        Ok(TracerPath {
            kind: TracerKind::InverseBoundary,
            start: HalfPlanePoint::real(a),
            samples,
        })
    }

    /// `H(t) = F_t^{-1}(b) - F_t^{-1}(a)` at each requested time.
    pub fn harmonic_measure<T: Real>(&self, a: T, b: T, sample_times: &[f64]) -> Result<Vec<T>> {
        if !(a < b) {
            return Err(ShlError::InvalidArgument("harmonic measure needs a < b".into()));
        }
        let lo = self.inverse_boundary_flow(a, sample_times)?;
        let hi = self.inverse_boundary_flow(b, sample_times)?;
        Ok(lo
            .samples
            .iter()
            .zip(&hi.samples)
            .map(|(l, h)| h.1.re - l.1.re)
            .collect())
    }

    /// Arrivals in `(0, t]` whose base lies in `[F_{u-}^{-1}(a), F_{u-}^{-1}(b)]`.
    pub fn interval_attachments(&self, a: f64, b: f64, t: f64) -> Result<IntervalAttachments> {
        if !(a < b) {
            return Err(ShlError::InvalidArgument("interval needs a < b".into()));
        }
        check_span(0.0, t, self.log.horizon())?;
        let mut lo = a;
        let mut hi = b;
        let mut now = 0.0;
        let mut h_prev = b - a;
        let mut integral = 0.0;
        let mut attached = Vec::new();
        for e in &self.log.events()[..self.log.count_until(t)] {
            lo = self.drift_real_inverse(lo, e.t - now);
            hi = self.drift_real_inverse(hi, e.t - now);
            integral += 0.5 * (h_prev + (hi - lo)) * (e.t - now);
            if lo <= e.x && e.x <= hi {
                attached.push(*e);
            }
            lo = unit_inverse_real(e.x, lo);
            hi = unit_inverse_real(e.x, hi);
            h_prev = hi - lo;
            now = e.t;
        }
        lo = self.drift_real_inverse(lo, t - now);
        hi = self.drift_real_inverse(hi, t - now);
        integral += 0.5 * (h_prev + (hi - lo)) * (t - now);
        Ok(IntervalAttachments {
            attached,
            h_integral: integral,
            h_final: hi - lo,
        })
    }

    /// Real finger flow `F^ℝ_{s,t}(a)`: arrivals in `(s, t]` projected onto
    /// the axis, newest first, so that `F_t(a) = F_s(F^ℝ_{s,t}(a))` on the
    /// real line.
    pub fn finger_real_flow<T: Real>(&self, a: T, s: f64, t: f64) -> Result<T> {
        check_span(s, t, self.log.horizon())?;
        let events = &self.log.events()[self.log.count_until(s)..self.log.count_until(t)];
        let mut cur = a;
        let mut later = t;
        for e in events.iter().rev() {
            cur = self.drift_real(cur, later - e.t);
            cur = unit_real_projection(T::lit(e.x), cur);
            later = e.t;
        }
        Ok(self.drift_real(cur, later - s))
    }

    /// The same projections applied oldest first. Equal in law to
    /// [`Self::finger_real_flow`] for a fixed starting point, and a Markov
    /// chain in `t`.
    pub fn finger_real_flow_reversed<T: Real>(&self, a: T, s: f64, t: f64) -> Result<T> {
        check_span(s, t, self.log.horizon())?;
        let events = &self.log.events()[self.log.count_until(s)..self.log.count_until(t)];
        let mut cur = a;
        let mut now = s;
        for e in events {
            cur = self.drift_real(cur, e.t - now);
            cur = unit_real_projection(T::lit(e.x), cur);
            now = e.t;
        }
        Ok(self.drift_real(cur, t - now))
    }

    /// Finger nodes `F_s(F^ℝ_{s,t}(a))` for each `s` in the grid.
    pub fn finger_path<T: Real>(&self, a: T, t: f64, s_grid: &[f64]) -> Result<FingerPath<T>> {
        check_times(s_grid, t)?;
        check_span(0.0, t, self.log.horizon())?;
        let nodes = s_grid
            .iter()
            .map(|&s| {
                let base = self.finger_real_flow(a, s, t)?;
                Ok((s, self.forward_evaluate(HalfPlanePoint::real(base), s)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FingerPath {
            tip_time: t,
            anchor: a,
            nodes,
        })
    }
}

/// `F_t^{-1}(a)` with the literal windowed composition.
pub fn inverse_boundary_flow<T: Real>(log: &EventLog, a: T, sample_times: &[f64]) -> Result<TracerPath<T>> {
    Process::new(log).inverse_boundary_flow(a, sample_times)
}

/// Harmonic measure of `[a, b]` with the literal windowed composition.
pub fn harmonic_measure<T: Real>(log: &EventLog, a: T, b: T, sample_times: &[f64]) -> Result<Vec<T>> {
    Process::new(log).harmonic_measure(a, b, sample_times)
}

/// Attachments to `[a, b]` up to `t` with the literal windowed composition.
pub fn interval_attachments(log: &EventLog, a: f64, b: f64, t: f64) -> Result<IntervalAttachments> {
    Process::new(log).interval_attachments(a, b, t)
}

pub fn finger_real_flow<T: Real>(log: &EventLog, a: T, s: f64, t: f64) -> Result<T> {
    Process::new(log).finger_real_flow(a, s, t)
}

pub fn finger_real_flow_reversed<T: Real>(log: &EventLog, a: T, s: f64, t: f64) -> Result<T> {
    Process::new(log).finger_real_flow_reversed(a, s, t)
}

pub fn finger_path<T: Real>(log: &EventLog, a: T, t: f64, s_grid: &[f64]) -> Result<FingerPath<T>> {
    Process::new(log).finger_path(a, t, s_grid)
}
