//! Exact gradient decompositions of mutual information for Gaussian
//! multiple-access channels.
//!
//! The engine represents jointly Gaussian signals as [`LinearForm`]s whose
//! coefficients are forward-mode [`DualScalar`]s, so second moments and
//! their derivatives with respect to a channel gain are exact. On top of it
//! sit the two-user feedback scheme ([`sk`]), the no-feedback MAC ([`nf`]),
//! a grid-based scalar channel laboratory ([`lab`]), a Monte Carlo
//! cross-check ([`mc`]), sweep tables ([`sweep`]) and the verification
//! harness ([`verify`]).

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual;
pub mod error;
pub mod lab;
pub mod linear_form;
pub mod mc;
pub mod nf;
pub mod report;
pub mod sk;
pub mod sweep;
pub mod verify;

pub use dual::DualScalar;
pub use error::{Error, Result};
pub use linear_form::{covariance, lmmse_estimate, variance, LinearForm, Lmmse};
pub use nf::NfConfig;
pub use report::DecompositionReport;
pub use sk::{Feedback, SkConfig, SkTrace};
