// SPDX-License-Identifier: MIT
//! Core library for graph-local causal discovery under unknown regime changes.
//!
//! The pipeline: block-based dependence scores ([`blocks`]) feed a three-valued
//! marked independence test ([`mcit`]); a constraint-based engine ([`pc`]) runs
//! against pseudo-tests per state; detected regime tests are resolved into a
//! state space ([`state_space`]) by the fixpoint loop in [`mcd`]. Synthetic
//! benchmarks live in [`scm`] and [`metrics`].
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod blocks;
pub mod data;
pub mod graph;
pub mod implication;
pub mod mcd;
pub mod mcit;
pub mod metrics;
pub mod num;
pub mod pc;
pub mod scm;
pub mod state_space;
pub(crate) mod util;

pub use util::derive_seed;

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    InvalidInput(String),
    /// Union of graphs contains a directed cycle.
    Cycle,
    /// Too few samples per block for the conditioning dimension.
    DofExhausted { b: usize, z_dim: usize },
    /// Block size exceeds the sample count.
    NoBlocks,
    /// Indicator resampling stayed trivial for the whole retry budget.
    RetryExhausted,
}

impl CoreError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidInput(msg.into())
    }
}

impl core::fmt::Display for CoreError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CoreError::InvalidInput(m) => write!(f, "invalid input: {m}"),
            CoreError::Cycle => write!(f, "graph union contains a cycle"),
            CoreError::DofExhausted { b, z_dim } => {
                write!(f, "degrees of freedom exhausted: block size {b}, |Z| = {z_dim}")
            }
            CoreError::NoBlocks => write!(f, "no usable blocks (block size exceeds sample count)"),
            CoreError::RetryExhausted => write!(f, "indicator resampling retry budget exhausted"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
