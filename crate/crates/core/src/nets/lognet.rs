//! Covering-number brackets for binary trees with polynomial weights,
//! computed from level membership alone.

use super::level::level_net;
use super::separated::chain_levels;
use crate::error::Result;
use crate::metric::DecayProfile;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNetCounts {
    pub epsilon: f64,
    /// `log` of the size of the full-level order net at `eps`.
    pub log_upper: f64,
    /// `log` of the chain-construction separated set at `2 eps`, when it has
    /// at least one point.
    pub log_lower_chain: Option<f64>,
    /// `log` of the levels up to `phi^{-1}((2 eps)^q)`.
    pub log_lower_levels: f64,
    pub log_lower: f64,
    pub net_levels: usize,
    pub chain_m: u64,
}

/// `log sum 2^l`.
fn log_sum_pow2(levels: impl Iterator<Item = u64>) -> Option<f64> {
    let logs: Vec<f64> = levels.map(|l| l as f64 * LN_2).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return None;
    }
    Some(top + logs.iter().map(|x| (x - top).exp()).sum::<f64>().ln())
}

/// Brackets `log N(T, d, eps) <= log Ñ(T, d, eps)` on the infinite binary
/// tree with `alpha(t) = max(1,|t|)^{-gamma/q}` and `sigma = 1`.
pub fn binary_lognet_counts(gamma: f64, q: f64, eps_grid: &[f64]) -> Result<Vec<LogNetCounts>> {
    let profile = DecayProfile::polynomial(gamma, 1.0)?;
    eps_grid
        .iter()
        .map(|&eps| {
            let net = level_net(&profile, eps.powf(q) / 2.0, None)?;
            let levels = net.levels();
            let log_upper = log_sum_pow2(std::iter::once(0).chain(levels.iter().copied())).unwrap();
            let chain = chain_levels(&profile, q, 2.0 * eps)?;
            let log_lower_chain = log_sum_pow2(chain.v.iter().skip(1).copied());
            let top = profile.phi_inv((2.0 * eps).powf(q));
            let last = if top >= 0.0 { top.floor() as u64 } else { 0 };
            let log_lower_levels = log_sum_pow2(0..=last).unwrap();
            Ok(LogNetCounts {
                epsilon: eps,
                log_upper,
                log_lower_chain,
                log_lower_levels,
                log_lower: log_lower_chain.unwrap_or(0.0).max(log_lower_levels),
                net_levels: levels.len() + 1,
                chain_m: chain.m,
            })
        })
        .collect()
}
