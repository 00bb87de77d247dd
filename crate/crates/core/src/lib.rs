//! User-specific cyberbullying severity detection.
//!
//! The crate covers the whole pipeline: ingestion and windowing of user
//! records, text preprocessing, rule-based affect scoring, vulnerability
//! weighting, LSI keyword expansion, intensity labeling, LDA topics, CBoW
//! embeddings, feature assembly, a two-input LSTM classifier trained with
//! hand-written backpropagation, and model-agnostic explanations.

pub mod affect;
pub mod binio;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod explain;
pub mod features;
pub mod harness;
pub mod labeler;
pub mod net;
pub mod seeding;
pub mod semantics;
pub mod textprep;
pub mod topics;
pub mod vulnerability;

pub use error::{Error, Result};
