//! Numerical laboratory for shrinkage estimation under balanced losses and
//! scale mixtures of normals.
//!
//! The crate has three layers:
//!
//! * model ingredients: loss kernels and balanced losses ([`kernels`]),
//!   scale-mixture sampling models and their tilted companions ([`mixture`]),
//!   shrinkage estimators and Bayes rules ([`estimators`]);
//! * analysis: adaptive quadrature on the half line ([`quad`]), dominance
//!   cut-off constants by independent routes ([`cutoffs`]), paired Monte
//!   Carlo risk comparison ([`risk`]), structural certificates
//!   ([`diagnostics`]);
//! * orchestration: reproducible streams ([`rng`]), run configuration
//!   ([`config`]), and the command-line front end ([`runner`]).

pub mod config;
pub mod cutoffs;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod mixture;
pub mod quad;
pub mod risk;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
