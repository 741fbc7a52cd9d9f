//! Numerical building blocks shared by the distribution and model code.

pub mod quad;
pub mod roots;
pub mod special;
