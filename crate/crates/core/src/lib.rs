//! Numerical laboratory for effective spectral-gap bounds on random covers
//! and random unitary bundles over hyperbolic surfaces.
//!
//! The crate covers the free-group combinatorics, random permutation and
//! Haar unitary representations, norm estimation for ∑ a_γ ⊗ ρ(γ) and its
//! regular-representation counterpart, the half-degree linearization step,
//! hyperbolic kernels and lattice counting, and the certificate arithmetic
//! that turns operator-norm bounds into spectral-gap bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::len_without_is_empty)]

pub mod certificate;
pub mod error;
pub mod free_group;
pub mod harness;
pub mod hyperbolic;
pub mod linalg;
pub mod linearization;
pub mod operator_lab;
pub mod parametrix;
pub mod representations;
pub mod rng;

pub use error::{Error, Result};
pub use free_group::{ReducedWord, SupportSet};
pub use operator_lab::CoefficientMap;
pub use representations::{Flavor, RepresentationSample};
