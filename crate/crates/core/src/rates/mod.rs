//! Exponent fitting, predicted rates and the experiment driver.

mod experiment;
mod fit;
mod predict;

pub use experiment::*;
pub use fit::{fit_covering, fit_log_points, fit_points, fit_small_deviation, FitModel, FitOptions, RateFit, Series};
pub use predict::{predict, CoveringRate, CoveringShape, EntropyRate, Family, Law, PredictParams, RatePrediction};
