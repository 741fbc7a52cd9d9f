#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod diffusion;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod numeric;
pub mod queue;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
