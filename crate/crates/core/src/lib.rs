//! Resource selection for federated web search.
//!
//! The crate covers the whole broker pipeline over uncooperative search
//! engines: simulated query-based sampling, a centralized sample index,
//! collection size estimation, big- and small-document selection methods,
//! and the evaluation and robustness statistics used to compare them.
//!
//! Data flows roughly as
//! [`corpus`] → [`sampler`] → [`index`] / [`sizeest`] → [`select`] → [`eval`],
//! with [`exp`] wiring everything into reproducible experiment reports.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod exp;
pub mod index;
pub mod sampler;
pub mod seed;
pub mod select;
pub mod sizeest;

pub use error::{Error, Result};
