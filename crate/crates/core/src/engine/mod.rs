//! Evaluation of the growth process from an [`EventLog`].
//!
//! Two compositions of the same slit maps are provided:
//!
//! * the **backward** map `F̃_t = s_{x_k} ∘ … ∘ s_{x_1}` applies slits in
//!   increasing time order, so one tracked point is a Markov chain;
//! * the **forward** map `F_t = s_{x_1} ∘ … ∘ s_{x_k}` attaches each new slit
//!   innermost, `F_t = F_{t-} ∘ s_x`, and is the map whose image of the real
//!   line is the cluster.
//!
//! A log only holds arrivals with `|x| <= n`. With [`TailMode::Truncated`]
//! the maps above are composed literally (the finite-window approximant).
//! With [`TailMode::Compensated`] the deterministic drift of the arrivals
//! outside the window, known in closed form, is integrated between events as
//! a flow step. This removes the `O(Im z / n)` drift deficit of the truncated
//! composition while leaving the fluctuations of nearby slits untouched.

mod boundary;
mod particle;
mod probe;

pub use boundary::{
    finger_path, finger_real_flow, finger_real_flow_reversed, harmonic_measure, interval_attachments,
    inverse_boundary_flow, FingerPath, IntervalAttachments,
};
pub use particle::{extract_particle, slit_heights, ParticleRecord, DEFAULT_ARC_SAMPLES};
pub use probe::{rescaled_forward, window_convergence_probe, ProbeStep, PROBE_GRID_POINTS};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShlError};
use crate::events::{EventLog, SlitEvent};
use crate::kernel::{
    tail_drift, tail_drift_derivative, tail_drift_real, unit_forward, unit_forward_with_derivative,
    HalfPlanePoint,
};
use crate::scalar::{Real, C};

/// Longest time step of one Euler sub-step of the compensating flow.
const MAX_DRIFT_STEP: f64 = 0.05;

/// How arrivals outside the sampled window are accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Literal composition of the sampled slits only.
    #[default]
    Truncated,
    /// Sampled slits plus the closed-form mean drift of the missing ones.
    Compensated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub tail: TailMode,
    /// Raise [`ShlError::WindowExceeded`] when a complex tracer drifts past
    /// half the window.
    pub window_guard: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            tail: TailMode::Truncated,
            window_guard: true,
        }
    }
}

impl EngineOptions {
    pub fn compensated() -> Self {
        Self {
            tail: TailMode::Compensated,
            ..Self::default()
        }
    }

    pub fn with_tail(mut self, tail: TailMode) -> Self {
        self.tail = tail;
        self
    }

    pub fn unguarded(mut self) -> Self {
        self.window_guard = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracerKind {
    Forward,
    Backward,
    InverseBoundary,
    FingerReal,
}

/// Values of one tracer at the requested sample times. Real-valued kinds
/// store their value with a zero imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracerPath<T> {
    pub kind: TracerKind,
    pub start: HalfPlanePoint<T>,
    pub samples: Vec<(f64, HalfPlanePoint<T>)>,
}

impl<T: Real> TracerPath<T> {
    pub fn last(&self) -> Option<HalfPlanePoint<T>> {
        self.samples.last().map(|s| s.1)
    }

    pub fn values(&self) -> impl Iterator<Item = HalfPlanePoint<T>> + '_ {
        self.samples.iter().map(|s| s.1)
    }
}

/// Running chain-rule product kept as `exp(log_abs) · phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeAccumulator<T> {
    pub log_abs: T,
    pub phase: C<T>,
}

impl<T: Real> Default for DerivativeAccumulator<T> {
    fn default() -> Self {
        Self {
            log_abs: T::zero(),
            phase: C::new(T::one(), T::zero()),
        }
    }
}

impl<T: Real> DerivativeAccumulator<T> {
    #[inline]
    pub fn push(&mut self, factor: C<T>) {
        let m = factor.norm();
        self.log_abs = self.log_abs + m.ln();
        let p = self.phase * (factor / m);
        // Keep the phase on the unit circle.
        self.phase = p / p.norm();
    }

    pub fn value(&self) -> C<T> {
        self.phase * self.log_abs.exp()
    }
}

pub(crate) fn check_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(ShlError::InvalidArgument("sample times must be sorted".into()));
    }
    if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
        if first < 0.0 || last > horizon {
            return Err(ShlError::InvalidArgument(format!(
                "sample times must lie in [0, {horizon}]"
            )));
        }
    }
    Ok(())
}

fn check_time(t: f64, horizon: f64) -> Result<()> {
    if !(t >= 0.0 && t <= horizon) {
        return Err(ShlError::InvalidArgument(format!("time {t} outside [0, {horizon}]")));
    }
    Ok(())
}

/// Immutable view of one realization under fixed engine options.
#[derive(Debug, Clone, Copy)]
pub struct Process<'a> {
    log: &'a EventLog,
    opts: EngineOptions,
}

impl<'a> Process<'a> {
    pub fn new(log: &'a EventLog) -> Self {
        Self::with_options(log, EngineOptions::default())
    }

    pub fn compensated(log: &'a EventLog) -> Self {
        Self::with_options(log, EngineOptions::compensated())
    }

    pub fn with_options(log: &'a EventLog, opts: EngineOptions) -> Self {
        Self { log, opts }
    }

    pub fn log(&self) -> &'a EventLog {
        self.log
    }

    pub fn options(&self) -> EngineOptions {
        self.opts
    }

    fn compensating(&self) -> bool {
        self.opts.tail == TailMode::Compensated
    }

    #[inline]
    fn guard<T: Real>(&self, z: C<T>, time: f64) -> Result<()> {
        if !self.opts.window_guard {
            return Ok(());
        }
        let limit = 0.5 * self.log.window();
        let re = z.re.to_f64_lossy().abs();
        if re > limit || re.is_nan() {
            return Err(ShlError::WindowExceeded {
                re_abs: re,
                limit,
                time,
                suggested: 2.0 * self.log.window(),
            });
        }
        Ok(())
    }

    /// Advances `z` along the compensating flow for `dt`.
    #[inline]
    pub(crate) fn drift<T: Real>(&self, z: C<T>, dt: f64) -> C<T> {
        if !self.compensating() || dt <= 0.0 {
            return z;
        }
        let n = T::lit(self.log.window());
        let steps = (dt / MAX_DRIFT_STEP).ceil().max(1.0);
        let h = T::lit(dt / steps);
        let mut z = z;
        for _ in 0..steps as usize {
            z = z + tail_drift(z, n) * h;
            z.im = z.im.max(T::zero());
        }
        z
    }

    #[inline]
    fn drift_with_derivative<T: Real>(
        &self,
        z: C<T>,
        dt: f64,
        acc: &mut DerivativeAccumulator<T>,
    ) -> C<T> {
        if !self.compensating() || dt <= 0.0 {
            return z;
        }
        let n = T::lit(self.log.window());
        let steps = (dt / MAX_DRIFT_STEP).ceil().max(1.0);
        let h = T::lit(dt / steps);
        let mut z = z;
        for _ in 0..steps as usize {
            let jac = C::new(T::one(), T::zero()) + tail_drift_derivative(z, n) * h;
            z = z + tail_drift(z, n) * h;
            z.im = z.im.max(T::zero());
            acc.push(jac);
        }
        z
    }

    /// Forward compensating flow restricted to the real line.
    #[inline]
    pub(crate) fn drift_real<T: Real>(&self, a: T, dt: f64) -> T {
        if !self.compensating() || dt <= 0.0 {
            return a;
        }
        let n = T::lit(self.log.window());
        let steps = (dt / MAX_DRIFT_STEP).ceil().max(1.0);
        let h = T::lit(dt / steps);
        let mut a = a;
        for _ in 0..steps as usize {
            a = a + tail_drift_real(a, n) * h;
        }
        a
    }

    /// Inverse of [`Self::drift_real`]: solves `b = a + D(a) h` for `a`
    /// sub-step by sub-step, in reverse.
    #[inline]
    pub(crate) fn drift_real_inverse<T: Real>(&self, b: T, dt: f64) -> T {
        if !self.compensating() || dt <= 0.0 {
            return b;
        }
        let n = T::lit(self.log.window());
        let steps = (dt / MAX_DRIFT_STEP).ceil().max(1.0);
        let h = T::lit(dt / steps);
        let mut b = b;
        for _ in 0..steps as usize {
            let mut a = b - tail_drift_real(b, n) * h;
            for _ in 0..3 {
                a = b - tail_drift_real(a, n) * h;
            }
            b = a;
        }
        b
    }

    fn events_until(&self, t: f64) -> &'a [SlitEvent] {
        &self.log.events()[..self.log.count_until(t)]
    }

    fn events_before(&self, t: f64) -> &'a [SlitEvent] {
        &self.log.events()[..self.log.count_before(t)]
    }

    /// Backward trajectory of `z`, sampled after all events `<= t` for each
    /// requested `t`.
    pub fn backward_evaluate<T: Real>(
        &self,
        z: HalfPlanePoint<T>,
        sample_times: &[f64],
    ) -> Result<TracerPath<T>> {
        check_times(sample_times, self.log.horizon())?;
        let mut samples = Vec::with_capacity(sample_times.len());
        let events = self.log.events();
        let mut cur = z.to_complex();
        let mut now = 0.0;
        let mut next = 0;
        for &ts in sample_times {
            while next < events.len() && events[next].t <= ts {
                let e = events[next];
                cur = self.drift(cur, e.t - now);
                cur = unit_forward(T::lit(e.x), cur);
                self.guard(cur, e.t)?;
                now = e.t;
                next += 1;
            }
            let at = self.drift(cur, ts - now);
            self.guard(at, ts)?;
            samples.push((ts, HalfPlanePoint::from_complex(at)));
        }
        Ok(TracerPath {
            kind: TracerKind::Backward,
            start: z,
            samples,
        })
    }

    /// Backward map at a single time.
    pub fn backward_at<T: Real>(&self, z: HalfPlanePoint<T>, t: f64) -> Result<HalfPlanePoint<T>> {
        check_time(t, self.log.horizon())?;
        let mut cur = z.to_complex();
        let mut now = 0.0;
        for e in self.events_until(t) {
            cur = self.drift(cur, e.t - now);
            cur = unit_forward(T::lit(e.x), cur);
            self.guard(cur, e.t)?;
            now = e.t;
        }
        let cur = self.drift(cur, t - now);
        self.guard(cur, t)?;
        Ok(HalfPlanePoint::from_complex(cur))
    }

    /// Backward map value and its derivative at `z`.
    pub fn backward_with_derivative<T: Real>(
        &self,
        z: HalfPlanePoint<T>,
        t: f64,
    ) -> Result<(HalfPlanePoint<T>, DerivativeAccumulator<T>)> {
        check_time(t, self.log.horizon())?;
        let radius = T::lit(crate::kernel::BRANCH_EXCLUSION_RADIUS);
        let mut acc = DerivativeAccumulator::default();
        let mut cur = z.to_complex();
        let mut now = 0.0;
        for e in self.events_until(t) {
            cur = self.drift_with_derivative(cur, e.t - now, &mut acc);
            let x = T::lit(e.x);
            let w = cur - x;
            let dist = (w - T::one()).norm().min((w + T::one()).norm());
            if dist < radius {
                return Err(ShlError::BranchPoint {
                    distance: dist.to_f64_lossy(),
                    radius: radius.to_f64_lossy(),
                });
            }
            let (v, d) = unit_forward_with_derivative(x, cur);
            acc.push(d);
            cur = v;
            self.guard(cur, e.t)?;
            now = e.t;
        }
        let cur = self.drift_with_derivative(cur, t - now, &mut acc);
        self.guard(cur, t)?;
        Ok((HalfPlanePoint::from_complex(cur), acc))
    }

    pub fn backward_derivative<T: Real>(&self, z: HalfPlanePoint<T>, t: f64) -> Result<C<T>> {
        self.backward_with_derivative(z, t).map(|(_, acc)| acc.value())
    }

    /// Applies the forward map built from `events` (newest innermost) ending
    /// at time `t_end`, with the compensating flow between arrivals.
    fn forward_over<T: Real>(&self, events: &[SlitEvent], z: C<T>, t_end: f64) -> Result<C<T>> {
        let mut cur = z;
        let mut later = t_end;
        for e in events.iter().rev() {
            cur = self.drift(cur, later - e.t);
            cur = unit_forward(T::lit(e.x), cur);
            self.guard(cur, e.t)?;
            later = e.t;
        }
        let cur = self.drift(cur, later);
        self.guard(cur, 0.0)?;
        Ok(cur)
    }

    /// Forward map `F_t(z)`: events `<= t` applied newest first.
    pub fn forward_evaluate<T: Real>(&self, z: HalfPlanePoint<T>, t: f64) -> Result<HalfPlanePoint<T>> {
        check_time(t, self.log.horizon())?;
        self.forward_over(self.events_until(t), z.to_complex(), t)
            .map(HalfPlanePoint::from_complex)
    }

    /// Left limit `F_{t-}(z)`: only events strictly before `t`.
    pub fn forward_before<T: Real>(&self, z: HalfPlanePoint<T>, t: f64) -> Result<HalfPlanePoint<T>> {
        check_time(t, self.log.horizon())?;
        self.forward_over(self.events_before(t), z.to_complex(), t)
            .map(HalfPlanePoint::from_complex)
    }

    /// Forward map sampled at several times.
    pub fn forward_path<T: Real>(&self, z: HalfPlanePoint<T>, times: &[f64]) -> Result<TracerPath<T>> {
        check_times(times, self.log.horizon())?;
        let samples = times
            .iter()
            .map(|&t| self.forward_evaluate(z, t).map(|v| (t, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TracerPath {
            kind: TracerKind::Forward,
            start: z,
            samples,
        })
    }
}

/// Backward trajectory of `z` with the literal windowed composition.
pub fn backward_evaluate<T: Real>(
    log: &EventLog,
    z: HalfPlanePoint<T>,
    sample_times: &[f64],
) -> Result<TracerPath<T>> {
    Process::new(log).backward_evaluate(z, sample_times)
}

/// Forward map `F_t(z)` with the literal windowed composition.
pub fn forward_evaluate<T: Real>(log: &EventLog, z: HalfPlanePoint<T>, t: f64) -> Result<HalfPlanePoint<T>> {
    Process::new(log).forward_evaluate(z, t)
}

/// Derivative of the backward map at `z` with the literal windowed composition.
pub fn backward_derivative<T: Real>(log: &EventLog, z: HalfPlanePoint<T>, t: f64) -> Result<C<T>> {
    Process::new(log).backward_derivative(z, t)
}
