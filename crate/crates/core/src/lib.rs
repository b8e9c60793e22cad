//! Exact Gaussian-process regression on the unit circle with arc-cosine
//! kernels, Mercer spectral analysis, and power-law learning-curve
//! experiments.
//!
//! The crate is organized in four layers:
//! - [`kernels`]: zonal kernel profiles and Gram matrices on S¹;
//! - [`spectral`]: Mercer eigendecomposition, target expansions, exponent
//!   estimation, and deterministic leading-order learning curves;
//! - [`gpr`]: exact GP inference and the information-theoretic functionals
//!   (normalized stochastic complexity, Bayesian generalization error,
//!   excess MSE, kernel-ridge equivalence);
//! - [`lab`]: seeded Monte-Carlo experiments comparing measured log-log
//!   slopes against the predicted exponents.

pub mod gpr;
pub mod kernels;
pub mod lab;
pub mod numerics;
pub mod spectral;
pub mod targets;

pub use gpr::{Dataset, PosteriorState};
pub use kernels::{AngularPoint, GramMatrix, KernelSpec};
pub use spectral::{RatePrediction, Spectrum, TargetExpansion, TheoryCurve};
pub use targets::BuiltinTarget;
