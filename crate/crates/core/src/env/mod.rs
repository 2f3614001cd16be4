//! Benchmark environments and the enumerable toy model.

pub mod boxpushing;
pub mod toy;
pub mod warehouse;

pub use boxpushing::BoxPushing;
pub use toy::{ToyEnv, ToySpec};
pub use warehouse::Warehouse;
