//! Joint transmit-precoder / multi-sector BD-RIS design for RSMA downlink
//! under imperfect CSI, with a Monte Carlo experiment harness.
//!
//! The crate is generic over the real scalar type (see [`Scalar`]); the
//! aliases below pin the common `f64` instantiations.

pub mod bcd;
pub mod bdris;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod precoder;
pub mod rng;
pub mod scalar;
pub mod socp;

pub use config::{RadiationPattern, Scheme, SystemConfig, ValidatedConfig};
pub use error::{Error, Result};
pub use scalar::Scalar;

/// Complex scalar aliases.
pub type C32 = nalgebra::Complex<f32>;
pub type C64 = nalgebra::Complex<f64>;

/// Concrete `f64` instantiations of the main domain types.
pub type SystemConfig64 = config::SystemConfig<f64>;
pub type ValidatedConfig64 = config::ValidatedConfig<f64>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type CsiSampleSet64 = channel::CsiSampleSet<f64>;
pub type BdRis64 = metrics::BdRis<f64>;
pub type PrecoderSolution64 = metrics::PrecoderSolution<f64>;
pub type RateReport64 = metrics::RateReport<f64>;
