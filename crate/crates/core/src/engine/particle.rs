//! Particles: images of the unit slit attached at a marked arrival.

use serde::{Deserialize, Serialize};

use super::Process;
use crate::error::{Result, ShlError};
use crate::events::EventLog;
use crate::kernel::HalfPlanePoint;
use crate::scalar::Real;

pub const DEFAULT_ARC_SAMPLES: usize = 64;

/// Smallest slit height sampled; the image derivative can blow up at the base.
const MIN_SLIT_HEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleRecord<T> {
    pub attach_time: f64,
    pub base: f64,
    pub image_polyline: Vec<HalfPlanePoint<T>>,
    pub diameter: T,
}

/// Heights in `(0, 1]` clustered geometrically toward zero, ending at 1.
pub fn slit_heights(samples: usize) -> Vec<f64> {
    assert!(samples >= 2, "need at least two arc samples");
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|j| MIN_SLIT_HEIGHT.powf(1.0 - j as f64 / last))
        .collect()
}

pub(crate) fn max_pairwise<T: Real>(pts: &[HalfPlanePoint<T>]) -> T {
    let mut best = T::zero();
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(p.dist(q));
        }
    }
    best
}

impl<'a> Process<'a> {
    /// Image of `(x, x + i]` under `F_{t-}`.
    pub fn particle_at<T: Real>(&self, t: f64, x: f64, arc_samples: usize) -> Result<ParticleRecord<T>> {
        if arc_samples < 2 {
            return Err(ShlError::InvalidArgument("arc_samples must be at least 2".into()));
        }
        let image_polyline = slit_heights(arc_samples)
            .into_iter()
            .map(|s| {
                let z = HalfPlanePoint::from_complex(crate::scalar::C::new(T::lit(x), T::lit(s)));
                self.forward_before(z, t)
            })
            .collect::<Result<Vec<_>>>()?;
        let diameter = max_pairwise(&image_polyline);
        Ok(ParticleRecord {
            attach_time: t,
            base: x,
            image_polyline,
            diameter,
        })
    }

    /// Particle at the log's injected arrival, which must be `(t, x)`.
    pub fn extract_particle<T: Real>(&self, t: f64, x: f64, arc_samples: usize) -> Result<ParticleRecord<T>> {
        match self.log.injected() {
            Some(e) if e.t == t && e.x == x => self.particle_at(t, x, arc_samples),
            _ => Err(ShlError::MissingInjection { t, x }),
        }
    }
}

pub fn extract_particle<T: Real>(log: &EventLog, t: f64, x: f64, arc_samples: usize) -> Result<ParticleRecord<T>> {
    Process::new(log).extract_particle(t, x, arc_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::sample_events;

    #[test]
    fn heights_are_clustered_and_end_at_one() {
        let h = slit_heights(64);
        assert_eq!(h.len(), 64);
        assert!((h[0] - 1e-6).abs() < 1e-18);
        assert_eq!(h[63], 1.0);
        assert!(h.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn empty_history_gives_the_slit() {
        let log = EventLog::from_events(vec![], 10.0, 10.0, 0).unwrap();
        let log = log.inject_point(5.0, 0.0).unwrap();
        let p: ParticleRecord<f64> = extract_particle(&log, 5.0, 0.0, 64).unwrap();
        assert!((p.diameter - (1.0 - 1e-6)).abs() < 1e-12);
        assert_eq!(p.image_polyline.last().unwrap().im, 1.0);
    }

    #[test]
    fn missing_injection_is_reported() {
        let log = sample_events(2.0, 10.0, 1).unwrap();
        let e = extract_particle::<f64>(&log, 1.0, 0.0, 64).unwrap_err();
        assert!(matches!(e, ShlError::MissingInjection { .. }));
        let log = log.inject_point(1.0, 0.0).unwrap();
        assert!(extract_particle::<f64>(&log, 1.0, 0.5, 64).is_err());
        assert!(extract_particle::<f64>(&log, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn diameter_bounds_the_end_to_end_distance() {
        for seed in 0..20 {
            let log = sample_events(5.0, 20.0, seed).unwrap().inject_point(5.0, 0.0).unwrap();
            let p: ParticleRecord<f64> = extract_particle(&log, 5.0, 0.0, 32).unwrap();
            let ends = p.image_polyline[0].dist(p.image_polyline.last().unwrap());
            assert!(p.diameter >= ends);
            assert!(p.diameter > 0.0);
        }
    }
}
