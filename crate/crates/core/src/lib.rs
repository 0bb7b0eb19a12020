//! Stationary Hastings–Levitov growth in the upper half-plane.
//!
//! The crate is layered: [`kernel`] evaluates single slit maps and the
//! integral identities they satisfy, [`events`] samples and stores the
//! Poisson driver, [`engine`] composes slit maps into the forward, backward,
//! inverse and finger flows, [`experiments`] runs seeded Monte Carlo
//! campaigns over many realizations, and [`render`] turns one realization
//! into SVG and CSV artifacts.

pub mod engine;
pub mod error;
pub mod events;
pub mod experiments;
pub mod kernel;
pub mod quadrature;
pub mod render;
pub mod scalar;
pub mod stats;

pub use engine::{
    backward_derivative, backward_evaluate, extract_particle, finger_path, finger_real_flow,
    forward_evaluate, harmonic_measure, inverse_boundary_flow, rescaled_forward, window_convergence_probe,
    DerivativeAccumulator, EngineOptions, FingerPath, ParticleRecord, Process, TailMode, TracerKind,
    TracerPath,
};
pub use error::{Result, ShlError};
pub use experiments::{run_experiment, ExperimentReport, ExperimentSpec, Verdict, EXPERIMENTS};
pub use events::{replica_seed, sample_events, EventLog, SlitEvent};
pub use kernel::{
    slit_derivative, slit_forward, slit_inverse, slit_inverse_real, slit_real_projection, HalfPlanePoint,
    SlitParams,
};
pub use quadrature::{quad_derivative_l2, quad_drift, quad_inverse_l2, quad_l2_displacement, QuadratureResult};
pub use scalar::{Real, C};
pub use stats::{KsResult, ScalingFitResult};

/// Library version embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double precision point, the type used by experiments and artifacts.
pub type Point = HalfPlanePoint<f64>;
/// Double precision slit parameters.
pub type Slit = SlitParams<f64>;
/// Double precision tracer path.
pub type Path64 = TracerPath<f64>;
/// Double precision particle record.
pub type Particle = ParticleRecord<f64>;
/// Double precision finger path.
pub type Finger = FingerPath<f64>;
