//! Shared numeric kernels: quadrature, root finding, special functions.

pub mod quad;
pub mod roots;
pub mod special;
