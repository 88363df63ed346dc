//! Analog black and white holes in stationary Lorentzian metrics of moving
//! media: metric algebra, null ray tracing, characteristic direction fields,
//! horizon detection as limit cycles, and black/white classification.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod media;
pub mod metric;
pub mod fields;
pub mod horizon;
pub mod ode;
pub mod rays;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
