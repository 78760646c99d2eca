//! Simulation and verification toolkit for the (m,q,d) low individual degree test.

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod gen;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod naimark;
pub mod orthogonalize;
pub mod pasting;
pub mod poly;
pub mod protocol;
pub mod sdp;
pub mod spectral;
pub mod strategy;

pub use error::{Error, Result};
pub use field::{Fe, Field};

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
