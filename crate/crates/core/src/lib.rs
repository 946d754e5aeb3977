//! Secret-key generation from compound correlated sources.
//!
//! Two terminals observe i.i.d. repetitions of correlated random variables
//! `(X, Y)` while an eavesdropper observes a correlated `Z`, but the joint
//! law is only known to lie in a finite family of candidate states. One
//! public, one-way, rate-limited message is allowed. This crate provides
//! the pieces needed to study what key rates survive that uncertainty:
//!
//! - exact capacity formulas for degraded families and single-letter
//!   achievable rates for general ones ([`capacity`]),
//! - letter-typicality machinery with exact set probabilities, not just
//!   exponential bounds ([`typicality`]),
//! - binned codebook construction, encoding and decoding ([`coding`]),
//! - random-function privacy amplification with computable security
//!   indices ([`extraction`]),
//! - state estimation from source blocks ([`estimation`]),
//! - an end-to-end simulated protocol with per-state reliability and
//!   security reporting ([`protocol`]).
//!
//! Start with the examples directory: each example exercises one of the
//! capabilities above on a small instance. The `skgen` binary exposes the
//! same entry points as subcommands for scripted runs.

// Guards written as !(x > 0.0) reject NaN along with the out-of-range
// values; the suggested x <= 0.0 comparison would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Matrix and tensor loops are indexed on purpose so the code lines up
// with the formulas it implements.
#![allow(clippy::needless_range_loop)]

pub mod capacity;
pub mod cli;
pub mod coding;
pub mod error;
pub mod estimation;
pub mod extraction;
pub mod prob;
pub mod protocol;
pub mod report;
pub mod seeds;
pub mod simplex;
pub mod source;
pub mod sourcefile;
pub mod typicality;

pub use error::{Error, Result};
