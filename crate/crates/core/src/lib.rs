//! Common finite covers for graphs with coloured fins and for graphs of
//! spaces whose edge spaces are circles.
//!
//! All arithmetic is exact: densities, weights and ratios are big rationals.

pub mod balanced;
pub mod cover;
pub mod error;
pub mod fins;
pub mod gos;
pub mod graph;
pub mod io;
pub mod leighton;
pub mod omnipotence;
pub mod pipeline;
pub mod ratio;
pub mod sample;
mod star;
pub mod types;
pub mod words;

/// Exact rational scalar used throughout.
pub type Rational = num_rational::BigRational;

pub use cover::{verify_covering, CoverReport, CoveringMap, FinImage, GraphCover};
pub use error::{FinGraphError, GosError, LeightonError, PipelineError, WordError};
pub use fins::{Direction, Fin, GraphWithFins, OrientedFin};
pub use graph::{Dart, Graph};
