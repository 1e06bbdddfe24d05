#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Numerical laboratory for Lamperti's maximal branching process.
//!
//! The chain moves by `X_{n+1} = max(nu_1, ..., nu_{X_n})` where the `nu_k`
//! are iid copies of a branching number with cdf `F`. Its kernel is
//! `P(i, j) = F(j)^i - F(j-1)^i`. The crate designs `F` from a target
//! invariant law, builds truncated chains, classifies countable chains, and
//! studies hitting times of the top state of a truncated chain.

pub mod chain;
pub mod cli;
pub mod design;
pub mod error;
pub mod hitting;
pub mod io;
pub mod laws;
pub mod montecarlo;
pub mod logtail;
pub mod series;
pub mod special;

pub use error::{LabError, Result};
