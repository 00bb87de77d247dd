//! Metrics, configuration and the staged pipeline over a workspace directory.
//!
//! Stages find their inputs by fixed file names and fail with the name of the
//! producing stage when one is missing. Stage seeds come from
//! [`crate::seeding::derive_seed`] applied to the root seed.

mod benchmark;
mod config;
mod metrics;
mod pipeline;

pub use benchmark::{separable_benchmark, separable_examples, BenchmarkResult};
pub use config::{ModelKind, PipelineConfig};
pub use metrics::{compute_metrics, MetricsReport};
pub use pipeline::*;
