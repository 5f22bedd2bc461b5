//! Probabilistic PV power forecasting from ensemble irradiance forecasts.
//!
//! The crate converts ensemble GHI forecasts to PV power through a physics
//! model chain, post-processes either stage with EMOS or neural networks
//! producing censored normal distributions, and verifies the resulting
//! forecasts with the CRPS and calibration diagnostics.

pub mod chain;
pub mod config;
pub mod data;
pub mod dist;
pub mod emos;
pub mod error;
pub mod eval;
pub mod nn;
pub mod normal;
pub mod optim;
pub mod pipeline;
pub mod seed;
pub mod solar;
pub mod synthetic;

pub use dist::{Bounds, CensoredNormal, EmpiricalEnsemble};
pub use error::{Error, ErrorClass, Result};
