//! Lindblad generators with detailed balance, sandwiched Rényi divergences and
//! the gradient-flow structure of the quantum Markov semigroups they generate.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balance;
pub mod cli;
pub mod divergence;
pub mod error;
pub mod flow;
pub mod generator;
pub mod io;
pub mod matcore;
pub mod noncomm;
pub mod random;

pub use error::{LelError, Result};
