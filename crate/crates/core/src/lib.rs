//! q-deformed growth-optimal portfolios.
//!
//! Fits multivariate q-Gaussian models to daily price relatives, maximizes the
//! growth q-rate `E[ln_q(b.x)]` over the portfolio simplex, backtests wealth and
//! q-wealth, and checks the asymptotic optimality statements by simulation.

pub mod asymptotics;
pub mod config;
pub mod data;
pub mod error;
pub mod estimation;
pub mod numerics;
pub mod optimizer;
pub mod persist;
pub mod qalgebra;
pub mod qgaussian;
pub mod rng;
pub mod special;
pub mod wealth;

pub use config::PipelineConfig;
pub use data::PriceRelativeSeries;
pub use error::{Error, Result};
pub use estimation::{FitConfig, FitResult};
pub use numerics::{DeConfig, IntegrationMethod, IntegratorSpec};
pub use optimizer::{GrowthRateEstimate, Portfolio};
pub use qalgebra::Deformation;
pub use qgaussian::{MultivariateQGaussian, UnivariateQGaussian};
pub use wealth::{BacktestReport, WealthTrajectory};
