//! Jamming-robust uplink processing for spatially correlated massive MIMO.
//!
//! The crate models a single-cell uplink where one jammer contaminates the
//! pilot of a target user and keeps transmitting during the data phase. It
//! provides:
//!
//! - [`covmodel`]: local-scattering channel covariances and correlated
//!   channel sampling,
//! - [`sysmodel`]: the scenario description, exact second-order statistics
//!   and received-signal synthesis,
//! - [`estimators`]: the SE-maximizing (MS) channel estimator, the MMSE
//!   baseline and the closed-form effective SINR of the bilinear equalizer,
//! - [`impairments`]: the same machinery under transmitter hardware
//!   distortion,
//! - [`jamstats`]: sample estimation of the jammer statistics the MS
//!   estimator needs,
//! - [`powalloc`]: pilot/data power allocation for the users and the jammer,
//! - [`montecarlo`]: reproducible Monte Carlo evaluation of arbitrary linear
//!   detectors, including the MMSE-ZF baseline.
//!
//! Powers are linear and noise-normalized throughout; the receiver noise has
//! unit variance per antenna.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covmodel;
pub mod error;
pub mod estimators;
pub mod impairments;
pub mod jamstats;
pub mod linalg;
pub mod montecarlo;
pub mod powalloc;
pub mod quadrature;
pub mod synthetic;
pub mod sysmodel;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use num_complex::Complex64;
