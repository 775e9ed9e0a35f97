//! Metric entropy of weighted summation operators on trees.
//!
//! The crate builds finite rooted trees, attaches weights `(alpha, sigma, q)`,
//! evaluates the induced tree metric, constructs and verifies covering and
//! order nets, realizes the summation operator together with its dyadic
//! factorization, and simulates the associated Gaussian field.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common case.

pub mod checks;
pub mod covering;
pub mod error;
pub mod gaussian;
pub mod metric;
pub mod nets;
pub mod operator;
pub mod rates;
mod quad;
pub mod scalar;
pub mod tree;
pub mod weights;

pub use error::{Error, Result};
pub use metric::{DecayKind, DecayProfile, MetricEvaluator};
pub use scalar::Scalar;
pub use tree::{LevelProfile, NodeId, Tree, TreeKind};
pub use weights::{boundedness_statistic, dyadic_round, mazja_rosin_statistic, LevelWeights, WeightLaw, WeightSystem};

pub type WeightSystem64 = WeightSystem<f64>;
pub type WeightLaw64 = WeightLaw<f64>;
pub type DecayProfile64 = DecayProfile<f64>;
pub type MetricEvaluator64<'a> = MetricEvaluator<'a, f64>;
