//! Key-rate engine for independent-interferometer QKD with advantage
//! distillation.
//!
//! The crate is organised bottom-up: [`bell`] holds Bell-diagonal states
//! and entropies, [`distill`] the block-parity distillation map and Eve's
//! worst case over the free parameter, [`channel`] the optical model,
//! [`events`] detection statistics, [`keyrate`] rates and their
//! optimisation, [`mc`] the Monte-Carlo cross-checks and [`sweep`] the
//! batch driver used by the command-line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod channel;
pub mod distill;
pub mod error;
pub mod events;
pub mod keyrate;
pub mod mc;
pub mod search;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
