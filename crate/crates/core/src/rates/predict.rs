//! Predicted covering and entropy exponents by tree family and weight law.

use crate::error::{Error, Result};
use crate::scalar::conjugate;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `R(n) <= c n^lambda`.
    Moderate { lambda: f64 },
    Biased { lambda: u32 },
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// `alpha sigma ~ |t|^{-gamma/q}`.
    Polynomial,
    /// `alpha sigma ~ 2^{-gamma |t| / q}`.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictParams {
    pub family: Family,
    pub law: Law,
    pub q: f64,
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringShape {
    /// `N ~ eps^{-a} |log eps|^b`.
    Power,
    /// `log N ~ eps^{-a}`.
    Stretched,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringRate {
    pub shape: CoveringShape,
    pub a: f64,
    pub b: f64,
}

/// `e_n ~ n^{-power} (log n)^{log_power}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRate {
    pub power: f64,
    pub log_power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub params: PredictParams,
    pub source: String,
    pub regime: String,
    pub critical: bool,
    pub covering: Option<CoveringRate>,
    pub entropy_upper: Option<EntropyRate>,
    pub entropy_lower: Option<EntropyRate>,
    /// For critical parameters, the predictions of the adjacent regimes.
    pub neighbors: Vec<RatePrediction>,
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() { 0.0 } else { 1.0 / x }
}

/// `1/p'` with `p = min(2, q)`.
fn inv_p_conj(q: f64) -> f64 {
    inv(conjugate(q.min(2.0)))
}

fn inv_q_conj(q: f64) -> f64 {
    inv(conjugate(q))
}

fn power_covering(a: f64, b: f64) -> Option<CoveringRate> {
    Some(CoveringRate { shape: CoveringShape::Power, a, b })
}

/// Entropy rates implied by `N ~ eps^{-a} |log eps|^b`, upper and lower.
fn from_power(q: f64, a: f64, b: f64) -> (EntropyRate, EntropyRate) {
    (
        EntropyRate { power: 1.0 / a + inv_p_conj(q), log_power: b / a },
        EntropyRate { power: 1.0 / a + inv_q_conj(q), log_power: b / a },
    )
}

fn regime(
    params: PredictParams,
    source: &str,
    regime: &str,
    covering: Option<CoveringRate>,
    upper: EntropyRate,
    lower: EntropyRate,
) -> RatePrediction {
    RatePrediction {
        params,
        source: source.into(),
        regime: regime.into(),
        critical: false,
        covering,
        entropy_upper: Some(upper),
        entropy_lower: Some(lower),
        neighbors: Vec::new(),
    }
}

fn critical(params: PredictParams, source: &str, label: &str, neighbors: Vec<RatePrediction>) -> RatePrediction {
    RatePrediction {
        params,
        source: source.into(),
        regime: label.into(),
        critical: true,
        covering: None,
        entropy_upper: None,
        entropy_lower: None,
        neighbors,
    }
}

/// Exponents for the given family; critical parameters are flagged and carry
/// the neighboring regimes instead of a prediction.
pub fn predict(params: PredictParams) -> Result<RatePrediction> {
    let PredictParams { family, law, q, gamma } = params;
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("rates need 1 < q < inf, got {q}")));
    }
    match law {
        Law::Polynomial if !(gamma > 1.0) => {
            return Err(Error::InvalidParameter(format!("polynomial law needs gamma > 1, got {gamma}")))
        }
        Law::Exponential if !(gamma > 0.0) => {
            return Err(Error::InvalidParameter(format!("exponential law needs gamma > 0, got {gamma}")))
        }
        _ => {}
    }
    match (family, law) {
        (Family::Moderate { lambda }, Law::Polynomial) => {
            if !(lambda >= 0.0) {
                return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
            }
            let above = |p| {
                let a = q * (lambda + 1.0) / gamma;
                let (up, lo) = from_power(q, a, 0.0);
                regime(p, "moderate trees, gamma > lambda + 1", "gamma_above", power_covering(a, 0.0), up, lo)
            };
            let below = |p| {
                let a = q * lambda / (gamma - 1.0);
                let (up, lo) = from_power(q, a, 0.0);
                regime(p, "moderate trees, gamma < lambda + 1", "gamma_below", power_covering(a, 0.0), up, lo)
            };
            Ok(if gamma > lambda + 1.0 {
                above(params)
            } else if gamma < lambda + 1.0 {
                below(params)
            } else {
                critical(params, "moderate trees", "gamma_equals_lambda_plus_one", vec![below(params), above(params)])
            })
        }
        (Family::Biased { lambda }, Law::Polynomial) => {
            let a = q * (lambda as f64 + 1.0) / gamma;
            let (up, lo) = from_power(q, a, 0.0);
            Ok(regime(params, "biased trees", "biased", power_covering(a, 0.0), up, lo))
        }
        (Family::Binary, Law::Polynomial) => {
            let a = q / (gamma - 1.0);
            let p_conj = conjugate(q.min(2.0));
            let q_conj = conjugate(q);
            let covering = Some(CoveringRate { shape: CoveringShape::Stretched, a, b: 0.0 });
            let lower = if a < q_conj {
                EntropyRate { power: inv_q_conj(q), log_power: inv_q_conj(q) - 1.0 / a }
            } else {
                EntropyRate { power: 1.0 / a, log_power: 0.0 }
            };
            let small = |p| {
                let up = EntropyRate { power: inv_p_conj(q), log_power: inv_p_conj(q) - 1.0 / a };
                regime(p, "binary trees, polynomial weights", "a_below_p_conj", covering, up, lower)
            };
            let large = |p| {
                let up = EntropyRate { power: 1.0 / a, log_power: 0.0 };
                regime(p, "binary trees, polynomial weights", "a_above_p_conj", covering, up, lower)
            };
            Ok(if a < p_conj {
                small(params)
            } else if a > p_conj {
                large(params)
            } else {
                critical(params, "binary trees, polynomial weights", "a_equals_p_conj", vec![small(params), large(params)])
            })
        }
        (Family::Binary, Law::Exponential) => {
            let a = q / gamma;
            let (up, lo) = from_power(q, a, 0.0);
            Ok(regime(params, "binary trees, exponential weights", "exponential", power_covering(a, 0.0), up, lo))
        }
        (f, l) => Err(Error::InvalidParameter(format!("no prediction for {f:?} with {l:?} weights"))),
    }
}
