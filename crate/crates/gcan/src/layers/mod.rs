//! Group-action network layers with forward and analytic backward passes.
//!
//! Every layer here is a geometric template: linear and convolutional
//! layers mix sandwich actions with scalar weights, the nonlinearity gates
//! grades, and the normalization rescales grades, so grade-k inputs map to
//! grade-k outputs throughout a stack.

mod batch;
mod conv;
mod kernel;
mod linear;
mod mix;
mod msilu;
mod norm;

pub use batch::{BatchDims, MultivectorBatch};
pub use conv::{GcaConv2d, GcaConv2dCache, GcaConv2dConfig, Padding};
pub use kernel::{
    get_clifford_kernel, left_mult_matrix, right_mult_matrix, rotational_kernel_g300,
    ActionKernel, CliffordKernelPair, SandwichData,
};
pub use linear::{GcaLinear, GcaLinearCache, GcaLinearConfig};
pub use msilu::{MsiLu, MsiLuCache, MsiLuConfig, MsiLuMode};
pub use norm::{GcaNorm, GcaNormCache, GcaNormConfig};

use crate::algebra::Algebra;

/// Blade mask for screw motions in G(3,0,1): scalar, the six bivectors,
/// and the quadvector.
pub fn screw_mask_g301(algebra: &Algebra) -> Vec<usize> {
    debug_assert_eq!(algebra.blade_count(), 16);
    std::iter::once(0)
        .chain(algebra.grade_range(2))
        .chain(algebra.grade_range(4))
        .collect()
}

/// Blade mask for rotations in G(3,0,0): scalar plus the three bivectors.
pub fn rotation_mask_g300(algebra: &Algebra) -> Vec<usize> {
    debug_assert_eq!(algebra.blade_count(), 8);
    std::iter::once(0).chain(algebra.grade_range(2)).collect()
}
