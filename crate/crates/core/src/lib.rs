//! Steady-state Gaussian correlations between two rotating mirrors in a
//! double Laguerre-Gaussian cavity with a shared magnon mode.
//!
//! The pipeline is [`model`] (parameters, drift and diffusion matrices),
//! [`lyapunov`] (stability and steady covariance), [`measures`]
//! (entanglement, steering and discord of a mode pair) and [`sweep`]
//! (grids and figure presets). [`selfcheck`] holds the oracle battery.

pub mod lyapunov;
pub mod measures;
pub mod model;
pub mod selfcheck;
pub mod sweep;

pub use lyapunov::{CovarianceMatrix, LyapunovError, StabilityReport};
pub use measures::{CorrelationSet, MeasureError, Mode, TwoModeCM};
pub use model::{DerivedParams, DetuningMode, ModelError, PhysicalParams, SystemMatrices};
pub use sweep::{evaluate_point, figure_preset, run_sweep, PipelineError, SweepError, SweepResult, SweepSpec};
