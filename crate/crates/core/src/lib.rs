//! Bi-criteria threshold algorithms for optimal stopping with a predicted
//! prior: execution, Monte Carlo estimation, analytic competitive ratios,
//! the MaxExp step-threshold solver and the MaxProb hardness LP.

pub mod analytics;
pub mod engine;
pub mod error;
pub mod hardness;
pub mod lambda;
pub mod maxexp;
pub mod prior;
pub mod quadrature;
pub mod threshold;
pub mod verify;

pub use error::{Error, Result};
pub use lambda::{lambda_pair, LambdaPair};
pub use prior::{DiscretePrior, Prior, QuantileTable};
pub use threshold::{accepts, dynkin_threshold, gm_threshold, single_threshold, ThresholdFn};
