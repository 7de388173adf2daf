//! Sound static analysis of linear digital filter networks.
//!
//! The crate computes exact Z-transform transfer matrices of filter networks,
//! certifies upper bounds on the L1 norm of their convolution kernels, tracks
//! fixed- and floating-point rounding errors compositionally, and combines
//! everything into worst-case output bounds
//! `|out| <= G |in| + H |reset| + eps`.

pub mod algebra;
pub mod bounds;
pub mod filter;
pub mod frontend;
pub mod numeric;
