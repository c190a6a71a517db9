//! Information-plane analysis of binary neural networks.
//!
//! * [`estimator`]: plug-in entropy and mutual information over bit-packed
//!   binary activations, the samples-to-width reliability check, and a
//!   Bernoulli benchmark with known ground truth.
//! * [`bnn`]: fully-connected networks with `{0,1}` sign activations trained
//!   through a saturation-aware straight-through estimator.
//! * [`data`]: IDX and SZT loaders, splits, and the activation dump format.
//! * [`analysis`]: compression factor, last-window aggregates, Spearman
//!   rank correlation.
//! * [`experiment`]: configuration, the training/estimation runner, run logs
//!   and the summary pipeline; [`plot`] renders SVG figures.

pub mod analysis;
pub mod bnn;
pub mod data;
pub mod estimator;
pub mod experiment;
pub mod numeric;
pub mod pattern;
pub mod plot;

pub use pattern::{BinaryPattern, PatternBatch};
