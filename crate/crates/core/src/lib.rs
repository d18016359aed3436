//! Sublinear, sampling-based low-rank matrix arithmetic.
//!
//! The crate provides sampling-and-query (SQ) access structures over vectors
//! and matrices, importance-sampling sketches built from them, singular value
//! and eigenvalue transformation engines producing RUR/CUR decompositions,
//! and the application pipelines (recommendation, clustering, PCA, regression,
//! SVM, Hamiltonian simulation, SDP feasibility, discriminant analysis)
//! composed from those primitives. A dense oracle module re-implements every
//! transformation directly for verification at moderate sizes.

pub mod dense;
pub mod error;
pub mod io;
pub mod oracle;
pub mod rng;
pub mod sketch;
pub mod sq;
pub mod stats;
pub mod svt;
pub mod synth;

pub mod apps;

pub use error::{Error, Result};
