//! Estimating the probability that at least one of `J` rare events occurs.
//!
//! The estimator samples an event `j` with probability `P_j / Σ P`, draws a
//! point conditionally on that event, counts how many events `S` hold there,
//! and averages `Σ P / S`. Every sample lands in the union, the estimate is
//! unbiased, and it always lies between `Σ P / J` and `Σ P`.
//!
//! Modules:
//! - [`stats`]: Gaussian special functions, truncated sampling, random streams.
//! - [`events`]: the event-system abstraction and Gaussian half-space problems.
//! - [`estimator`]: the sampler, its variance identities and bounds.
//! - [`benchmarks`]: polygon and high-dimensional test families.
//! - [`grid`]: DC power-flow constraint assembly.
//! - [`cli`]: the batch front end behind the `aloe` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod events;
pub mod grid;
pub mod stats;

pub use error::{AloeError, Result};
