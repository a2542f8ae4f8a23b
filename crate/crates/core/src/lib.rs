//! Support vector machine training in `l^{2m/(2m-1)}`-norm reproducing
//! kernel Banach spaces.
//!
//! The classifier has the form `f(x) = sum_n (phi_n . c)^{2m-1} phi_n(x)`
//! where `phi_n` are the feature functions of a power series kernel
//! truncated to M terms, and `c` solves
//!
//! ```text
//! min_c (1/n) sum_i L(y_i, f(x_i)) + lambda * A c^{2m}
//! ```
//!
//! with `A` the order-`2m` symmetric tensor of the truncated features.
//! Training alternates closed-form proximal steps for lower semicontinuous
//! piecewise losses with Newton solves of a strictly convex tensor equation
//! (an ADMM splitting); see [`solver`] for the loop, [`tensor`] for the
//! contraction shortcuts that avoid ever materializing `A`, and
//! [`kernels`] for the two built-in feature systems.
//!
//! The `parallel` feature (on by default) runs feature-matrix assembly,
//! multi-start restarts, and benchmark cells on a rayon pool. Reductions are
//! blocked with a fixed association order, so outputs are bit-identical with
//! the feature disabled.

pub mod benchmark;
pub mod data;
pub mod error;
mod exec;
pub mod kernels;
pub mod loss;
pub mod model;
mod num;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use kernels::{FeatureMatrix, KernelFamily, KernelSpec, MultiIndex};
pub use loss::LossSpec;
pub use model::TrainedModel;
pub use solver::{SolveResult, SolverConfig};
pub use tensor::TensorHandle;
