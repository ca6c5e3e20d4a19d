//! Information-theoretic tools for studying generalization on
//! task-identically distributed data: count tables over generating
//! variables, entropy measures, bounds, optimal outputs, synthetic tasks and
//! random-erasing augmentation.

pub mod augment;
pub mod checks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gv;
pub mod info;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod svg;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
