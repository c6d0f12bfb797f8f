// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certify;
pub mod correction;
pub mod decision;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod optim;
pub mod quantum;
pub mod ricochet;
pub mod sampling;

pub use error::{Error, Result};
