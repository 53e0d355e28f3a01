//! Estimation of a population proportion from a simple random sample drawn
//! without replacement, using a quantitative auxiliary variable whose
//! population mean and variance are known.
//!
//! The crate covers point estimators ([`estimators`]), their first-order
//! bias/MSE theory and optimal constants ([`theory`]), exact and Monte Carlo
//! verification ([`montecarlo`]) and file formats ([`io`]).

pub mod error;
pub mod estimators;
pub mod io;
pub mod montecarlo;
pub mod population;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{
    Constant, Estimate, EstimatorConfig, T1Config, T2Config, T3Config, TbConfig, TcConfig,
};
pub use population::{
    central_moment, compute_population_params, sample_stats, sampling_fraction, Design,
    PopulationFrame, PopulationParams, SampleStats, SummaryStatistics,
};
