//! Two-sample mean comparison under local differential privacy.
//!
//! Counters in `[0, m]` are privatized by a one-bit randomizer
//! ([`mechanism`]); the server estimates means and variances from the bits
//! ([`estimators`]), runs one of several tests ([`hypothesis`]) and plans
//! sample sizes from closed-form power bounds ([`power`]). [`sim`] repeats
//! experiments on synthetic populations and [`cli`] exposes everything as the
//! `ldp-ab` command.

// NaN must fail the guards, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod estimators;
pub mod hypothesis;
pub mod mechanism;
pub mod numerics;
pub mod power;
pub mod sim;

pub use error::{Error, Result};
