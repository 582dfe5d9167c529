//! Hybrid conditional-quantile estimation for first-order asymmetric power
//! GARCH models: simulation, generalized QMLE, weighted quantile regression
//! with asymptotic inference, stationarity and asymmetry tests, and
//! expanding-window Value-at-Risk forecasting with backtests.

pub mod error;
pub mod gqmle;
pub mod linalg;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod transform;
pub mod types;
pub mod volatility;

pub use error::{Error, Result};
pub use simulate::{
    alpha_plus_for_zero_gamma, beta_boundary, lyapunov_mc, simulate, simulate_full, SimOutput,
};
pub use transform::{inverse_transform, transform};
pub use types::{InitRule, InnovationDist, ModelParams, SeriesData};
pub use volatility::{volatility_path, VolState, VolatilityPath};
