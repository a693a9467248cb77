//! Reinforcement learning where every decision has a price.
//!
//! Agents pick options, an action paired with a repeat count, and pay a fixed compute cost
//! each time they decide. The crate bundles the environments, the option executor, tabular
//! and network learners, rate metrics and the experiment driver.

pub mod agents;
pub mod envs;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod metrics;
pub mod primitives;

pub use error::{Error, Result};
