#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod capacity;
pub mod cli;
pub mod config;
pub mod error;
pub mod exponents;
pub mod fit;
pub mod grid;
pub mod mild;
pub mod report;
pub mod semigroup;
pub mod transform;

pub use error::{Error, ErrorClass, Result};
