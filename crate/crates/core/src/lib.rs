//! Structure learning for heavy-tailed multivariate data.
//!
//! The crate learns causal DAGs (as CPDAGs), lagged time-series graphs and
//! undirected extremal Markov networks from samples with regularly varying
//! margins. Conditional-independence tests are replaced by tests of zero
//! partial tail correlation, computed from the tail pairwise dependence
//! matrix (TPDM) of the data in the transformed-linear algebra built on the
//! softplus map `t(x) = log(1 + exp(x))`.
//!
//! Modules, bottom-up:
//!
//! - [`tla`]: transformed-linear operations, Pareto sampling, rank standardization.
//! - [`tpdm`]: empirical and analytic tail pairwise dependence matrices.
//! - [`ptcc`]: partial tail covariance and the separation test.
//! - [`graph`]: DAG / CPDAG / undirected / lagged graphs, separation, metrics.
//! - [`models`]: ground-truth generators with seeded sampling.
//! - [`discovery`]: PC-stable skeleton search, orientation, time-series and
//!   undirected variants.
//! - [`cli`]: file-level commands behind the `extail` binary.

// `!(x > 0.0)` is used on purpose to reject NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod discovery;
mod error;
pub mod graph;
pub mod linalg;
pub mod models;
pub mod ptcc;
pub mod tla;
pub mod tpdm;

pub use error::{Error, Result};
