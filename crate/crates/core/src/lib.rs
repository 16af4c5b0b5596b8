//! Temporal n-gram analytics over timestamped short-text corpora.
//!
//! The pipeline turns a corpus into four per-n-gram monthly series:
//! frequency, embedding distance to the earliest available period,
//! mean sentiment and mean topic distribution.

pub mod bucket;
pub mod config;
pub mod embed;
pub mod error;
pub mod freq;
pub mod hash;
pub mod ingest;
pub mod phrases;
pub mod pipeline;
pub mod report;
pub mod scores;
pub mod store;
pub mod synth;
pub mod tokenize;

pub use bucket::{TimeBucket, YearMonth};
pub use error::{Error, Result};
