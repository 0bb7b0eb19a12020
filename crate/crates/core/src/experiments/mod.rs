//! Seeded Monte Carlo campaigns.
//!
//! An [`ExperimentSpec`] fully determines a campaign: replica `i` uses the
//! seed `replica_seed(base_seed, i)`, replicas run in parallel, and results
//! are reduced in index order, so the same spec always yields the same
//! [`ExperimentReport`] JSON regardless of the thread count.

mod campaigns;
mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use campaigns::*;
pub use report::{Check, Estimate, ExperimentReport, Interval, Rule, Verdict, REPORT_SCHEMA};

use crate::engine::{EngineOptions, TailMode};
use crate::error::{Result, ShlError};
use crate::events::{replica_seed, sample_events, splitmix64, EventLog};

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: [&str; 12] = [
    "mean-drift",
    "derivative-mean",
    "harmonic-martingale",
    "inverse-flow-bm",
    "finger-scaling",
    "particle-count",
    "diameter-tightness",
    "height-lln",
    "tree-width",
    "window-convergence",
    "tree-height",
    "forward-backward-ks",
];

/// How often a replica is rerun with a doubled window after its tracer
/// leaves the trusted part of the window.
const MAX_WINDOW_RETRIES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Number(v)
    }
}

impl From<Vec<f64>> for Param {
    fn from(v: Vec<f64>) -> Self {
        Param::List(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

impl Param {
    /// Parses `1.5`, `[1, 2, 3]` / `1,2,3`, or falls back to text.
    pub fn parse(s: &str) -> Param {
        let s = s.trim();
        if let Ok(v) = s.parse::<f64>() {
            return Param::Number(v);
        }
        let inner = s.trim_start_matches('[').trim_end_matches(']');
        let parts: std::result::Result<Vec<f64>, _> =
            inner.split(',').map(|p| p.trim().parse::<f64>()).collect();
        match parts {
            Ok(v) if s.contains(',') || s.starts_with('[') => Param::List(v),
            _ => Param::Text(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub replicas: usize,
    pub base_seed: u64,
    pub params: BTreeMap<String, Param>,
}

impl ExperimentSpec {
    pub fn new(name: &str, replicas: usize, base_seed: u64) -> Self {
        Self {
            name: name.to_string(),
            replicas,
            base_seed,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Param>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Param>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn has(&self, key: &str) -> bool {
        self.params.contains_key(key)
    }

    pub fn num(&self, key: &str) -> Result<f64> {
        match self.params.get(key) {
            Some(Param::Number(v)) => Ok(*v),
            Some(Param::List(v)) if v.len() == 1 => Ok(v[0]),
            Some(_) => Err(ShlError::InvalidArgument(format!("parameter `{key}` must be a number"))),
            None => Err(ShlError::InvalidArgument(format!("missing parameter `{key}`"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        match self.params.get(key) {
            Some(Param::List(v)) => Ok(v.clone()),
            Some(Param::Number(v)) => Ok(vec![*v]),
            Some(_) => Err(ShlError::InvalidArgument(format!("parameter `{key}` must be a list"))),
            None => Err(ShlError::InvalidArgument(format!("missing parameter `{key}`"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<String> {
        match self.params.get(key) {
            Some(Param::Text(v)) => Ok(v.clone()),
            Some(_) => Err(ShlError::InvalidArgument(format!("parameter `{key}` must be text"))),
            None => Err(ShlError::InvalidArgument(format!("missing parameter `{key}`"))),
        }
    }

    pub(crate) fn engine_options(&self) -> Result<EngineOptions> {
        let tail = match self.text("tail")?.as_str() {
            "compensated" => TailMode::Compensated,
            "truncated" => TailMode::Truncated,
            other => {
                return Err(ShlError::InvalidArgument(format!(
                    "tail must be `compensated` or `truncated`, got `{other}`"
                )))
            }
        };
        Ok(EngineOptions::default().with_tail(tail))
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(ShlError::InvalidArgument("replicas must be at least 2".into()));
        }
        if !EXPERIMENTS.contains(&self.name.as_str()) {
            return Err(ShlError::InvalidArgument(format!("unknown experiment `{}`", self.name)));
        }
        Ok(())
    }

    /// Default campaign for `name`, at the sizes of the acceptance table.
    pub fn default_for(name: &str) -> Result<Self> {
        let spec = match name {
            "mean-drift" => Self::new(name, 2000, 1)
                .with("z_re", 0.0)
                .with("z_im", 1.0)
                .with("t", 10.0)
                .with("window", 100.0)
                .with("tail", "compensated")
                .with("decay_heights", vec![1.0, 4.0, 16.0])
                .with("decay_replicas", 500.0),
            "derivative-mean" => Self::new(name, 2000, 2)
                .with("z_re", 0.0)
                .with("z_im", 1.0)
                .with("t", 10.0)
                .with("window", 100.0)
                .with("tail", "compensated")
                .with("decay_heights", vec![2.0, 8.0])
                .with("decay_t", 1.0),
            "harmonic-martingale" => Self::new(name, 2000, 3)
                .with("a", 0.0)
                .with("b", 1.0)
                .with("times", vec![1.0, 5.0, 20.0])
                .with("coalescence_times", vec![1.0, 5.0, 20.0, 200.0])
                .with("coalescence_tolerance", 1e-6)
                .with("window", 100.0)
                .with("tail", "compensated"),
            "inverse-flow-bm" => Self::new(name, 2000, 4)
                .with("a", 0.0)
                .with("times", vec![10.0, 20.0])
                .with("window", 100.0)
                .with("tail", "compensated"),
            "finger-scaling" => Self::new(name, 500, 5)
                .with("t", 10.0)
                .with("delta", 0.1)
                .with("s_grid", vec![0.0, 5.0, 10.0])
                .with("anchor", 0.0)
                .with("window", 400.0)
                .with("tail", "compensated"),
            "particle-count" => Self::new(name, 500, 6)
                .with("a", -1.0)
                .with("b", 1.0)
                .with("times", vec![4.0, 16.0, 64.0, 256.0])
                .with("martingale_t", 16.0)
                .with("tail", "compensated"),
            "diameter-tightness" => Self::new(name, 1000, 7)
                .with("times", vec![5.0, 20.0, 80.0])
                .with("q", 0.95)
                .with("ratio_bound", 2.0)
                .with("arc_samples", 64.0)
                .with("window", 60.0)
                .with("tail", "compensated"),
            "height-lln" => Self::new(name, 2000, 8)
                .with("t", 50.0)
                .with("fraction_bound", 0.95)
                .with("window", 100.0)
                .with("tail", "compensated"),
            "tree-width" => Self::new(name, 500, 9)
                .with("lambda", 1.0)
                .with("t", 20.0)
                .with("compare_t", 5.0)
                .with("a", 0.0)
                .with("b", 1.0)
                .with("bound", 1.2)
                .with("arc_samples", 9.0)
                .with("window", 40.0)
                .with("tail", "compensated"),
            "window-convergence" => Self::new(name, 200, 10)
                .with("z_re", 0.0)
                .with("z_im", 1.0)
                .with("t", 10.0)
                .with("windows", vec![100.0, 200.0, 400.0, 800.0])
                .with("ratio_bound", 2.0),
            "tree-height" => Self::new(name, 200, 11)
                .with("a", -1.0)
                .with("b", 1.0)
                .with("t", 16.0)
                .with("tail", "compensated"),
            "forward-backward-ks" => Self::new(name, 2000, 12)
                .with("z_re", 0.0)
                .with("z_im", 1.0)
                .with("t", 10.0)
                .with("window", 100.0)
                .with("level", 0.01)
                .with("tail", "compensated"),
            other => return Err(ShlError::InvalidArgument(format!("unknown experiment `{other}`"))),
        };
        Ok(spec)
    }
}

/// Seed of replica `i` in an auxiliary stream of the campaign, independent
/// of the main stream.
pub(crate) fn stream_seed(base_seed: u64, stream: u64, index: u64) -> u64 {
    if stream == 0 {
        replica_seed(base_seed, index)
    } else {
        replica_seed(splitmix64(base_seed.wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))), index)
    }
}

/// Log on `[0, t]` at window `w`; `t = 0` gives an empty log.
pub(crate) fn sample_log(t: f64, window: f64, seed: u64) -> Result<EventLog> {
    if t == 0.0 {
        EventLog::from_events(Vec::new(), 1.0, window, seed)
    } else {
        sample_events(t, window, seed)
    }
}

/// Runs `f` at `window`, doubling it whenever the tracer leaves the trusted
/// part of the window. Returns the value and the number of reruns.
pub(crate) fn with_window_retry<R>(window: f64, mut f: impl FnMut(f64) -> Result<R>) -> Result<(R, u32)> {
    let mut w = window;
    let mut attempt = 0;
    loop {
        match f(w) {
            Err(ShlError::WindowExceeded { .. }) if attempt < MAX_WINDOW_RETRIES => {
                w *= 2.0;
                attempt += 1;
            }
            other => return other.map(|v| (v, attempt)),
        }
    }
}

/// Evaluates `f(index, seed)` for `count` replicas of one seed stream in
/// parallel, returning results in index order.
pub(crate) fn run_replicas<R, F>(base_seed: u64, stream: u64, count: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|i| f(stream_seed(base_seed, stream, i)))
        .collect()
}

/// Runs the named campaign.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let start = Instant::now();
    let mut report = match spec.name.as_str() {
        "mean-drift" => exp_mean_drift(spec),
        "derivative-mean" => exp_derivative_mean(spec),
        "harmonic-martingale" => exp_harmonic_martingale(spec),
        "inverse-flow-bm" => exp_inverse_flow_bm(spec),
        "finger-scaling" => exp_finger_scaling(spec),
        "particle-count" => exp_particle_count(spec).map(|(r, _)| r),
        "diameter-tightness" => exp_diameter_tightness(spec),
        "height-lln" => exp_height_lln(spec),
        "tree-width" => exp_tree_width(spec),
        "window-convergence" => exp_window_convergence(spec),
        "tree-height" => exp_tree_height(spec),
        "forward-backward-ks" => exp_forward_backward_ks(spec),
        other => Err(ShlError::InvalidArgument(format!("unknown experiment `{other}`"))),
    }?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_has_a_default() {
        for name in EXPERIMENTS {
            let spec = ExperimentSpec::default_for(name).unwrap();
            spec.validate().unwrap();
            assert_eq!(spec.name, name);
        }
        assert!(ExperimentSpec::default_for("unknown-name").is_err());
    }

    #[test]
    fn params_parse_and_serialize() {
        assert_eq!(Param::parse("2.5"), Param::Number(2.5));
        assert_eq!(Param::parse("[1, 2,3]"), Param::List(vec![1.0, 2.0, 3.0]));
        assert_eq!(Param::parse("4,16"), Param::List(vec![4.0, 16.0]));
        assert_eq!(Param::parse("truncated"), Param::Text("truncated".into()));
        let spec = ExperimentSpec::default_for("particle-count").unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&json).unwrap(), spec);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ExperimentSpec::default_for("height-lln").unwrap();
        spec.replicas = 1;
        assert!(spec.validate().is_err());
        spec.replicas = 10;
        spec.set("tail", "bogus");
        assert!(spec.engine_options().is_err());
        assert!(spec.num("missing").is_err());
    }

    #[test]
    fn streams_are_distinct() {
        assert_ne!(stream_seed(1, 0, 0), stream_seed(1, 1, 0));
        assert_eq!(stream_seed(1, 0, 5), replica_seed(1, 5));
    }

    #[test]
    fn retry_doubles_the_window() {
        let (v, retries) = with_window_retry(10.0, |w| {
            if w < 40.0 {
                Err(ShlError::WindowExceeded { re_abs: 0.0, limit: 0.0, time: 0.0, suggested: 2.0 * w })
            } else {
                Ok(w)
            }
        })
        .unwrap();
        assert_eq!((v, retries), (40.0, 2));
        assert!(with_window_retry(10.0, |_| -> Result<()> { Err(ShlError::InvalidArgument("x".into())) }).is_err());
    }
}
