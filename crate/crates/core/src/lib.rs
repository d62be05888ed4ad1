//! Positive-unlabeled (PU) learning under class imbalance.
//!
//! The crate provides:
//!
//! - [`data`]: CSV ingestion, standardization, stratified splitting, synthetic
//!   mixtures and the SCAR / SAR labeling simulators that turn PN data into PU data.
//! - [`loss`]: sigmoid, logistic and composite focal surrogate losses.
//! - [`risk`]: PN, uPU, nnPU and focused non-negative (iFPU) empirical risks.
//! - [`model`]: a five-layer MLP scorer with hand-written backpropagation,
//!   Adam, and the non-negative training loop with its gradient-ascent branch.
//! - [`metrics`]: ROC-AUC, average precision and R-precision.
//! - [`harness`]: experiment grids, prior-sensitivity sweeps and reports.

pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod risk;
pub mod seed;

pub use error::{Error, Result};
