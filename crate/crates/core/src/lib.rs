//! Numerical laboratory for stable solutions of `−Δu = f(u)` on balls.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod nonlinearity;
pub mod solver;
pub mod stability;

pub use error::{LabError, Result};
