//! Two-part dictionary decomposition of space-time wavefields for anomaly
//! detection, with a bundled thin-plate simulator for synthetic validation.
//!
//! The pipeline factors a wavefield cube `X` into a diffuse part `D2 A2`
//! that captures the smooth bulk response and a sparse part `D1 A1` whose
//! atoms are constrained to an elastic-net ball so that localized response
//! features concentrate on few grid points. Persistent sparse activity is
//! then aggregated into a super-atom that flags and triangulates anomalous
//! partitions of the scan domain.

mod binio;
pub mod error;
pub mod learner;
pub mod pipeline;
pub mod simulator;
pub mod superatom;
pub mod sparse;
pub mod wavefield;

pub use error::{Error, Result};

// Re-exported so binaries configure the same thread pool the library uses.
pub use rayon;
