//! Poisson arrivals driving one realization.
//!
//! An [`EventLog`] is the restriction of an intensity-one Poisson process on
//! `[0, horizon] × [-window, window]` to a time-sorted list of slit events.
//! Sampling draws the count first and then i.i.d. uniform positions, so a
//! smaller window is obtained by plain set restriction ([`EventLog::filter_window`])
//! and nested windows share their randomness.
//!
//! Logs serialise to a little-endian binary layout:
//!
//! ```text
//! "SHL0" | version u32 | seed u64 | horizon f64 | window f64 | count u64
//!        | count × (t f64, x f64) | injected index i64 (-1 if none)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShlError};

pub const LOG_MAGIC: &[u8; 4] = b"SHL0";
pub const LOG_VERSION: u32 = 1;
/// Default ceiling on the expected number of events in one log.
pub const DEFAULT_CAPACITY: usize = 50_000_000;

/// One Poisson arrival: a unit slit attached at `x` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitEvent {
    pub t: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<SlitEvent>,
    horizon: f64,
    window: f64,
    intensity: f64,
    seed: u64,
    injected: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub intensity: f64,
    pub capacity: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            intensity: 1.0,
            capacity: DEFAULT_CAPACITY,
        }
    }
}

/// Samples the arrivals on `[0, horizon] × [-window, window]` with unit intensity.
pub fn sample_events(horizon: f64, window: f64, seed: u64) -> Result<EventLog> {
    sample_events_with(horizon, window, seed, SamplerConfig::default())
}

pub fn sample_events_with(
    horizon: f64,
    window: f64,
    seed: u64,
    cfg: SamplerConfig,
) -> Result<EventLog> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ShlError::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(ShlError::InvalidArgument(format!("window must be positive, got {window}")));
    }
    if !(cfg.intensity > 0.0 && cfg.intensity.is_finite()) {
        return Err(ShlError::InvalidArgument(format!(
            "intensity must be positive, got {}",
            cfg.intensity
        )));
    }
    let mean = cfg.intensity * 2.0 * window * horizon;
    if mean > cfg.capacity as f64 {
        return Err(ShlError::Capacity {
            expected: mean,
            budget: cfg.capacity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(mean)
        .map_err(|e| ShlError::InvalidArgument(e.to_string()))?
        .sample(&mut rng) as usize;
    let mut events: Vec<SlitEvent> = (0..count)
        .map(|_| {
            let t = horizon * rng.random::<f64>();
            let x = window * (2.0 * rng.random::<f64>() - 1.0);
            SlitEvent { t, x }
        })
        .collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    separate_ties(&mut events, horizon);
    Ok(EventLog {
        events,
        horizon,
        window,
        intensity: cfg.intensity,
        seed,
        injected: None,
    })
}

/// Pushes colliding arrival times apart by one ulp so times are strictly increasing.
fn separate_ties(events: &mut [SlitEvent], horizon: f64) {
    for i in 1..events.len() {
        if events[i].t <= events[i - 1].t {
            events[i].t = events[i - 1].t.next_up();
        }
    }
    // A nudge past the horizon is pulled back from the end.
    let mut cap = horizon;
    for e in events.iter_mut().rev() {
        if e.t > cap {
            e.t = cap;
        }
        cap = e.t.next_down();
    }
}

/// SplitMix64 finaliser: decorrelates consecutive replica indices.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` in a campaign started from `base_seed`.
pub fn replica_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(index))
}

impl EventLog {
    /// Builds a log from explicit events, e.g. for hand-crafted scenarios.
    pub fn from_events(events: Vec<SlitEvent>, horizon: f64, window: f64, seed: u64) -> Result<Self> {
        if !(horizon > 0.0) || !(window > 0.0) {
            return Err(ShlError::InvalidArgument("horizon and window must be positive".into()));
        }
        for (i, e) in events.iter().enumerate() {
            if !(e.t >= 0.0 && e.t <= horizon) {
                return Err(ShlError::InvalidArgument(format!("event time {} outside [0, {horizon}]", e.t)));
            }
            if !(e.x.abs() <= window) {
                return Err(ShlError::InvalidArgument(format!("event position {} outside the window {window}", e.x)));
            }
            if i > 0 && e.t <= events[i - 1].t {
                return Err(ShlError::DuplicateTime(e.t));
            }
        }
        Ok(Self {
            events,
            horizon,
            window,
            intensity: 1.0,
            seed,
            injected: None,
        })
    }

    pub fn events(&self) -> &[SlitEvent] {
        &self.events
    }
    pub fn len(&self) -> usize {
        self.events.len()
    }
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn window(&self) -> f64 {
        self.window
    }
    pub fn intensity(&self) -> f64 {
        self.intensity
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn injected_index(&self) -> Option<usize> {
        self.injected
    }
    pub fn injected(&self) -> Option<SlitEvent> {
        self.injected.map(|i| self.events[i])
    }

    /// Number of events with time `<= t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.t <= t)
    }

    /// Number of events with time `< t`.
    pub fn count_before(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.t < t)
    }

    /// Returns a copy with the extra arrival `(t, x)` inserted and flagged.
    pub fn inject_point(&self, t: f64, x: f64) -> Result<EventLog> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(ShlError::InvalidArgument(format!(
                "injection time {t} outside (0, {}]",
                self.horizon
            )));
        }
        if self.injected.is_some() {
            return Err(ShlError::InvalidArgument("log already carries an injected event".into()));
        }
        let at = self.events.partition_point(|e| e.t < t);
        if self.events.get(at).is_some_and(|e| e.t == t) {
            return Err(ShlError::DuplicateTime(t));
        }
        let mut out = self.clone();
        out.events.insert(at, SlitEvent { t, x });
        out.injected = Some(at);
        Ok(out)
    }

    /// Restriction to `|x| <= m`; the injected event is always kept.
    ///
    /// # Panics
    /// If `m` exceeds the log's window.
    pub fn filter_window(&self, m: f64) -> EventLog {
        assert!(m <= self.window, "sub-window {m} exceeds the sampled window {}", self.window);
        let mut injected = None;
        let mut events = Vec::new();
        for (i, e) in self.events.iter().enumerate() {
            let marked = self.injected == Some(i);
            if marked {
                injected = Some(events.len());
            }
            if marked || e.x.abs() <= m {
                events.push(*e);
            }
        }
        EventLog {
            events,
            horizon: self.horizon,
            window: m,
            intensity: self.intensity,
            seed: self.seed,
            injected,
        }
    }

    /// Events strictly after `t`, re-timed to start at zero.
    pub fn suffix_after(&self, t: f64) -> EventLog {
        let start = self.count_until(t);
        let events = self.events[start..]
            .iter()
            .map(|e| SlitEvent { t: e.t - t, x: e.x })
            .collect();
        EventLog {
            events,
            horizon: self.horizon - t,
            window: self.window,
            intensity: self.intensity,
            seed: self.seed,
            injected: self.injected.and_then(|i| i.checked_sub(start)),
        }
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(LOG_MAGIC)?;
        w.write_all(&LOG_VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        w.write_all(&self.window.to_le_bytes())?;
        w.write_all(&(self.events.len() as u64).to_le_bytes())?;
        for e in &self.events {
            w.write_all(&e.t.to_le_bytes())?;
            w.write_all(&e.x.to_le_bytes())?;
        }
        let inj = self.injected.map_or(-1i64, |i| i as i64);
        w.write_all(&inj.to_le_bytes())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<EventLog> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != LOG_MAGIC {
            return Err(ShlError::Format(format!("bad magic {magic:?}")));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != LOG_VERSION {
            return Err(ShlError::Format(format!("unsupported version {version}")));
        }
        let seed = u64::from_le_bytes(read_array(&mut r)?);
        let horizon = f64::from_le_bytes(read_array(&mut r)?);
        let window = f64::from_le_bytes(read_array(&mut r)?);
        let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let mut events = Vec::with_capacity(count.min(DEFAULT_CAPACITY));
        for _ in 0..count {
            let t = f64::from_le_bytes(read_array(&mut r)?);
            let x = f64::from_le_bytes(read_array(&mut r)?);
            events.push(SlitEvent { t, x });
        }
        let inj = i64::from_le_bytes(read_array(&mut r)?);
        let injected = match inj {
            -1 => None,
            i if i >= 0 && (i as usize) < count => Some(i as usize),
            i => return Err(ShlError::Format(format!("injected index {i} out of range"))),
        };
        if events.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(ShlError::Format("event times are not strictly increasing".into()));
        }
        Ok(EventLog {
            events,
            horizon,
            window,
            intensity: 1.0,
            seed,
            injected,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EventLog> {
        EventLog::read_binary(BufReader::new(File::open(path)?))
    }

    /// `t,x` rows with a header, shortest round-trip float formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x")?;
        for e in &self.events {
            writeln!(w, "{},{}", e.t, e.x)?;
        }
        Ok(())
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| ShlError::Format(format!("truncated log: {e}")))?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_matches_poisson_mean() {
        let log = sample_events(10.0, 200.0, 7).unwrap();
        let mean = 4000.0f64;
        assert!((log.len() as f64 - mean).abs() < 5.0 * mean.sqrt());
        assert!(log.events().windows(2).all(|w| w[0].t < w[1].t));
        assert!(log.events().iter().all(|e| e.x.abs() <= 200.0 && e.t <= 10.0 && e.t >= 0.0));
    }

    #[test]
    fn tiny_horizon_is_usually_empty() {
        let empty = (0..100).filter(|&s| sample_events(0.001, 1.0, s).unwrap().is_empty()).count();
        assert!(empty > 90);
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_events(3.0, 20.0, 99).unwrap(), sample_events(3.0, 20.0, 99).unwrap());
        assert_ne!(sample_events(3.0, 20.0, 99).unwrap(), sample_events(3.0, 20.0, 100).unwrap());
    }

    #[test]
    fn rejects_bad_arguments_and_capacity() {
        assert!(sample_events(0.0, 1.0, 1).is_err());
        assert!(sample_events(1.0, -1.0, 1).is_err());
        let cfg = SamplerConfig { intensity: 1.0, capacity: 100 };
        assert!(matches!(
            sample_events_with(10.0, 10.0, 1, cfg),
            Err(ShlError::Capacity { .. })
        ));
    }

    #[test]
    fn injection_inserts_in_time_order() {
        let log = sample_events(10.0, 5.0, 3).unwrap();
        let inj = log.inject_point(5.0, 0.0).unwrap();
        let i = inj.injected_index().unwrap();
        assert_eq!(inj.events()[i], SlitEvent { t: 5.0, x: 0.0 });
        assert_eq!(inj.len(), log.len() + 1);
        assert!(inj.events().windows(2).all(|w| w[0].t < w[1].t));
        assert!(log.inject_point(11.0, 0.0).is_err());
        assert!(log.inject_point(0.0, 0.0).is_err());
        let t0 = log.events()[0].t;
        assert!(matches!(log.inject_point(t0, 1.0), Err(ShlError::DuplicateTime(_))));
    }

    #[test]
    fn filtering_keeps_injected_event() {
        let log = sample_events(10.0, 5.0, 3).unwrap().inject_point(5.0, 4.9).unwrap();
        let f = log.filter_window(1.0);
        assert_eq!(f.injected(), Some(SlitEvent { t: 5.0, x: 4.9 }));
        assert!(f.events().iter().all(|e| e.x.abs() <= 1.0 || e.x == 4.9));
        let none = log.filter_window(0.0);
        assert_eq!(none.len(), 1);
        assert_eq!(log.filter_window(5.0).events(), log.events());
    }

    #[test]
    fn filtered_fraction_is_proportional() {
        let log = sample_events(10.0, 200.0, 11).unwrap();
        let f = log.filter_window(50.0);
        let p = 0.25;
        let n = log.len() as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((f.len() as f64 - n * p).abs() < 5.0 * sigma);
    }

    #[test]
    fn nested_windows_share_events() {
        let big = sample_events(4.0, 40.0, 5).unwrap();
        let small = big.filter_window(20.0);
        let expected: Vec<_> = big.events().iter().copied().filter(|e| e.x.abs() <= 20.0).collect();
        assert_eq!(small.events(), expected.as_slice());
        assert_eq!(small.seed(), big.seed());
    }

    #[test]
    fn binary_round_trip() {
        let log = sample_events(2.0, 10.0, 42).unwrap().inject_point(1.0, 0.0).unwrap();
        let mut buf = Vec::new();
        log.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SHL0");
        assert_eq!(buf.len(), 4 + 4 + 8 * 4 + 16 * log.len() + 8);
        let back = EventLog::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, log);
        assert!(EventLog::read_binary(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(EventLog::read_binary(bad.as_slice()), Err(ShlError::Format(_))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let log = sample_events(1.0, 3.0, 8).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x\n"));
        assert_eq!(text.lines().count(), log.len() + 1);
    }

    #[test]
    fn suffix_restarts_the_clock() {
        let log = sample_events(10.0, 5.0, 2).unwrap();
        let s = log.suffix_after(4.0);
        assert_eq!(s.len(), log.len() - log.count_until(4.0));
        assert!(s.events().iter().all(|e| e.t > 0.0 && e.t <= 6.0));
    }

    #[test]
    fn replica_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| replica_seed(1, i)).collect();
        assert_eq!(seeds.len(), 10_000);
    }
}
