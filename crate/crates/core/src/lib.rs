//! Deep-limit analysis of iterated covariance kernels on the sphere.
//!
//! The covariance function of an isotropic Gaussian field on S^d composes
//! with itself as depth grows. This crate builds such kernels (closed
//! forms, power series, or activation quadrature), classifies the regime
//! set by the derivative at 1, computes the limit profiles of the rescaled
//! deficit, assembles the limit covariance matrices and their quadratic-
//! form rate functions at finite point configurations, and samples the
//! centered field exactly for numerical verification of the limit
//! statements.
//!
//! Modules follow the pipeline:
//!
//! * [`kernels`] — construct and evaluate the base kernel
//! * [`iteration`] — deep composition, regime classification, limit profiles
//! * [`sphere`] — point configurations, Gegenbauer spectra, weighted means
//! * [`rates`] — limit covariance matrices and rate functions
//! * [`simulate`] — exact sampling and verification tables
//! * [`config`] / [`report`] — run configuration and deterministic output

pub mod config;
pub mod error;
pub mod interp;
pub mod iteration;
pub mod kernels;
pub mod quad;
pub mod rates;
pub mod report;
pub mod simulate;
pub mod special;
pub mod sphere;

pub use error::{Error, Result};
pub use iteration::{classify_regime, iterate_kernel, Regime, RegimeReport, SymmetrySet};
pub use kernels::{ActivationKind, ActivationSpec, BuiltinKernel, Kernel};
pub use rates::{matrix_b1, matrix_b2, rate_eval, ProfileEval, RateModel, RateValue};
pub use simulate::{centered_covariance, sample, Centering};
pub use sphere::PointConfig;
