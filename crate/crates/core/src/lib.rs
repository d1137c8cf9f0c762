#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod models;
pub mod nuclearity;
pub mod onep;
pub mod sectors;
pub mod states;
pub mod theta;

pub use error::{Error, Result};
