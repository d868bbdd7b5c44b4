//! Global hypothesis tests for functional data.
//!
//! Sampled curves are reduced to per-frequency Fourier coefficients, tailored
//! to a linear hypothesis of a functional linear model, and tested with
//! tapered quadratic forms, adaptive Neyman truncation or hard thresholding.
//! Critical values and power are obtained by reproducible Monte Carlo.

pub mod cli;
pub mod error;
pub mod flm;
pub mod fourier;
pub mod io;
pub mod montecarlo;
pub mod numerics;
pub mod rates;
pub mod simstudy;
pub mod teststats;

pub use error::{Error, Result};
