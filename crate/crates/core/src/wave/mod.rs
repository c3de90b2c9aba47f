//! Acoustic finite-difference propagation and cross-correlation imaging.
//!
//! Second order in time, eighth order (by default) in each spatial axis, with
//! Cerjan-style multiplicative damping in a boundary layer. Grids are 3D with
//! any axis allowed to collapse to a single point, so 1D and 2D share the
//! same code path. Axis 1 is depth and is the fastest-varying index.

mod imaging;
mod model;
mod propagator;
mod ricker;
mod seismogram;
mod snapshot;
mod stencil;
mod taper;
pub mod validate;

use std::fmt::Debug;

use thiserror::Error;

pub use imaging::{imaging_accumulate, Image};
pub use model::VelocityModel;
pub use propagator::{
    cfl_check, CflReport, Geometry, Propagator, PropagatorConfig, WaveState, Wavefield,
};
pub use ricker::{ricker, SourceWavelet};
pub use seismogram::Seismogram;
pub use snapshot::{SnapshotBackend, SnapshotStore, SNAPSHOT_MAGIC};
pub use stencil::{second_derivative_1d, stencil_coefficients};
pub use taper::cerjan_coefficients;

/// Grid point in interior (unpadded) coordinates `[depth, x, y]`.
pub type Point = [usize; 3];

/// Floating-point type a wavefield can be computed in.
pub trait Real: num_traits::Float + Send + Sync + Debug + 'static {}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn cast<T: Real>(x: f64) -> T {
    T::from(x).expect("value representable")
}

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("invalid velocity model: {0}")]
    Model(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("CFL violated: dt {dt:e} s exceeds stable bound {dt_max:e} s")]
    Cfl { dt: f64, dt_max: f64 },
    #[error("wavefield became non-finite at time step {step}")]
    Unstable { step: usize },
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
