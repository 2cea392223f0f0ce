//! Finite-alphabet control of continuous-time LTI plants using a
//! sum-of-absolute-values (SOAV) cost, an ADMM solver and an LP oracle.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod analysis;
pub mod cli;
pub mod cost;
mod error;
pub mod io;
pub mod lp;
pub mod mpc;
pub mod numerics;
pub mod plant;

pub use error::{Error, Result};
