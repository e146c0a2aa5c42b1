//! Stochastic configuration networks trained with privileged information.
//!
//! The crate builds single-hidden-layer networks one random node at a time.
//! Four trainers share one loop:
//!
//! * [`Variant::Scn`]: supervised node selection, projection output weights.
//! * [`Variant::ScnPlus`]: supervised selection with a privileged feature view
//!   that shapes the output weights during training only.
//! * [`Variant::Irvfl`] / [`Variant::IrvflPlus`]: the same without supervision.
//!
//! [`experiment`] runs the multi-trial benchmark protocol and
//! [`cli`] drives everything from the `scnplus` binary.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod model;
pub mod random_config;
pub mod solvers;
pub mod synthetic;
pub mod trainers;

pub use dataset::{DataTable, FeatureSplit, Preprocessor, TaskKind};
pub use error::{Result, ScnError};
pub use model::Model;
pub use random_config::{Activation, ScaleSchedule};
pub use solvers::LupiParams;
pub use trainers::{train, Network, TrainConfig, TrainData, TrainReport, Variant};
