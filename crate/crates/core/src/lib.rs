//! Asynchronous multi-agent actor-critic learning with macro-actions.

pub mod algorithms;
pub mod buffers;
pub mod env;
pub mod error;
pub mod harness;
pub mod macdec;
pub mod nn;

pub use error::{Error, Result};
