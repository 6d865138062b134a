//! Residual-fault prediction toolkit.
//!
//! Mines bug-fix commits from git repositories, labels them as pre- or
//! post-release faults, extracts code, process and naturalness metrics for
//! the methods they touched, and trains and explains classifiers that tell
//! the two kinds apart.

pub mod analysis;
pub mod catalog;
pub mod error;
pub mod history;
pub mod labeling;
pub mod learners;
pub mod mining;
pub mod metrics;
pub mod naturalness;
pub mod pipeline;
pub mod python;
pub mod repr;
pub mod scripted;

pub use error::{Error, Result};
