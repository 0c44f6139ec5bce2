//! Model-extraction attacks against counterfactual-explanation APIs.
//!
//! The crate simulates a cloud service that answers predictions and
//! counterfactual explanations (CFs) for a frozen binary classifier, and a set
//! of attackers that try to rebuild that classifier from the answers:
//!
//! - [`nn`]: a small dense MLP with exact backpropagation and Adam.
//! - [`data`]: synthetic generators, CSV ingestion, splits and normalization.
//! - [`oracle`]: the simulated API, its CF solver and a query meter.
//! - [`attacks`]: Steal-ML, CoreSet, Model Extraction, DualCF and DualCFX.
//! - [`linear`]: closed-form recovery of a linear model from one CF/CCF pair.
//! - [`eval`]: agreement, diagnostics and the seeded multi-run sweep engine.
//! - [`plot`]: dependency-free SVG charts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod classifier;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod linear;
pub mod nn;
pub mod oracle;
pub mod plot;
pub mod rng;

pub use classifier::Classifier;
pub use error::{Error, Result};
