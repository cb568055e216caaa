//! Bounded (truncated) Gaussian mechanism for epsilon-differential privacy on
//! interval and box domains.
//!
//! The univariate mechanism lives in [`univariate`], the isotropic box
//! mechanism in [`multivariate`]. [`verify`] holds brute-force auditors used
//! by the tests and the CLI, and [`experiment`] reproduces the graph-query
//! variance comparison.

// test oracles carry every digit they were computed with
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod error;
pub mod experiment;
pub mod graph;
pub mod multivariate;
pub mod optimize;
pub mod privacy;
pub mod special;
pub mod univariate;
pub mod verify;

pub use error::{Error, Result};
pub use multivariate::{BoxDomain, MultiCalibration, MultivariateMechanism, ShiftVector};
pub use privacy::PrivacySpec;
pub use special::{Interval, TruncatedNormal};
pub use univariate::{UniCalibration, UnivariateMechanism};
