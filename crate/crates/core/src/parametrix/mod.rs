//! Kernels and operators of the interior parametrix: cusp cutoffs, the free
//! resolvent and its truncation remainder, and the discretized operators
//! a_γ(s) on a truncated fundamental region.

pub mod cutoffs;
pub mod discretize;
pub mod kernel;

pub use cutoffs::{build_cutoffs, CutoffCertificate, CutoffPair, SmoothStep};
pub use discretize::{
    deviation_check, discretize_a_gamma, svd_truncate, DiscretizedAGamma, GridSpec, ParametrixContext,
    RegionGrid, Truncation,
};
pub use kernel::{
    decay_condition, kernel_s_derivative, kernel_s_derivative_check, operator_norm_envelope,
    remainder_bound_fit, remainder_kernel, resolvent_kernel, resolvent_kernel_dr, spherical_phi0,
    EnvelopeReport, RemainderTable,
};
