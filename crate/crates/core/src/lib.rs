//! Krylov-sequence reduced-order models for linear parabolic problems.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod isvd;
pub mod krylov;
pub mod mesh;
pub mod rom;
pub mod spla;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
