#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod distances;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod models;
pub mod operator;
pub mod random;

pub use error::{Error, Result};
