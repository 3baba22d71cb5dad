//! Simulation and analysis of paths of stochastic measures.
//!
//! * [`model`], [`rademacher`], [`sample`]: model catalogue, exact
//!   Rademacher-series realizations, sampled paths and dyadic fields.
//! * [`integrate`]: integrals of deterministic functions against a measure.
//! * [`besov`]: dyadic increment sums and the direct Besov norm.
//! * [`fourier`]: Fourier coefficients by parts and directly, partial sums,
//!   convergence diagnostics.
//! * [`verify`]: Monte Carlo and exact checks of the supporting inequalities.

pub mod besov;
pub mod error;
pub mod fourier;
pub mod integrate;
pub mod io;
pub mod model;
pub mod rademacher;
pub mod rng;
pub mod sample;
pub mod stats;
pub mod verify;

pub use error::{Result, SmError};
pub use model::{ModelKind, ModelSpec, SamplingConfig};
pub use rademacher::{realize_rademacher, RademacherRealization, SeriesMeasure};
pub use rng::RngStream;
pub use sample::{sample_field, sample_path, FieldSample, PathSample, PathSampler};
