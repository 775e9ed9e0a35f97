//! Least-squares exponent fits on `eps` sweeps.

use crate::covering::{Count, CoveringProfile};
use crate::error::{Error, Result};
use crate::gaussian::SmallDevEstimate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `log N = a log(1/eps) + b log log(1/eps) + c0`; `b` is fixed at 0
    /// unless `log_term` is set.
    Power { log_term: bool },
    /// `log log N = a log(1/eps) + c0`.
    Stretched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    Ball,
    Order,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub min_points: usize,
    /// Required span of the fitted quantity, in decades.
    pub min_decades: f64,
    /// Bounds count as usable when `upper <= (1 + tol) lower`.
    pub bounds_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { min_points: 6, min_decades: 2.0, bounds_tol: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: FitModel,
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Span of the fitted quantity in decades.
    pub decades: f64,
}

/// Fits `value(eps)` where `value` plays the role of `N`.
pub fn fit_points(points: &[(f64, f64)], model: FitModel, opts: &FitOptions) -> Result<RateFit> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(e, v)| (e, v.ln())).collect();
    fit_log_points(&logs, model, opts)
}

/// Same as [`fit_points`] with `log N` supplied directly, for counts beyond
/// floating-point range.
pub fn fit_log_points(points: &[(f64, f64)], model: FitModel, opts: &FitOptions) -> Result<RateFit> {
    let usable = in_domain(points.iter().copied(), model);
    let decades = span_decades(usable.iter().map(|p| p.1));
    check_enough(usable.len(), decades, opts)?;
    fit_usable(&usable, model, decades)
}

/// Drops points where the model's transformed coordinates are undefined.
fn in_domain(points: impl Iterator<Item = (f64, f64)>, model: FitModel) -> Vec<(f64, f64)> {
    points
        .filter(|&(e, lv)| {
            let base = e > 0.0 && e.is_finite() && lv.is_finite();
            match model {
                FitModel::Power { log_term: false } => base,
                // log log(1/eps) needs eps < 1/e to stay positive
                FitModel::Power { log_term: true } => base && e < (-1.0f64).exp(),
                FitModel::Stretched => base && lv > 0.0,
            }
        })
        .collect()
}

/// Decades spanned by values given through their logs.
fn span_decades(logs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi >= lo { (hi - lo) / std::f64::consts::LN_10 } else { 0.0 }
}

fn check_enough(n: usize, decades: f64, opts: &FitOptions) -> Result<()> {
    if n < opts.min_points || decades < opts.min_decades {
        return Err(Error::InsufficientData(format!(
            "{n} usable points spanning {decades:.2} decades; need {} points and {} decades",
            opts.min_points, opts.min_decades
        )));
    }
    Ok(())
}

fn fit_usable(usable: &[(f64, f64)], model: FitModel, decades: f64) -> Result<RateFit> {
    let rows = usable.len();
    let cols = match model {
        FitModel::Power { log_term: true } => 3,
        _ => 2,
    };
    let mut x = DMatrix::zeros(rows, cols);
    let mut y = DVector::zeros(rows);
    for (i, &(e, lv)) in usable.iter().enumerate() {
        let l = (1.0 / e).ln();
        x[(i, 0)] = l;
        x[(i, cols - 1)] = 1.0;
        if cols == 3 {
            x[(i, 1)] = l.ln();
        }
        y[i] = match model {
            FitModel::Stretched => lv.ln(),
            FitModel::Power { .. } => lv,
        };
    }
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::InsufficientData(format!("least squares failed: {e}")))?;
    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..rows).map(|i| y[i] - fitted[i]).collect();
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let (a, b, c0) = if cols == 3 { (beta[0], beta[1], beta[2]) } else { (beta[0], 0.0, beta[1]) };
    Ok(RateFit { model, a, b, c0, r_squared, residuals, epsilons: usable.iter().map(|p| p.0).collect(), decades })
}

/// Fits one count series of a covering profile, keeping exact counts and
/// bounds that agree within `bounds_tol`.
pub fn fit_covering(profile: &CoveringProfile, series: Series, model: FitModel, opts: &FitOptions) -> Result<RateFit> {
    let points: Vec<(f64, f64)> = profile
        .counts
        .iter()
        .filter_map(|c| {
            let count = match series {
                Series::Ball => &c.ball,
                Series::Order => &c.order,
            };
            let v = match *count {
                Count::Exact(n) => n as f64,
                Count::Bounds { lower, upper } if (upper as f64) <= (1.0 + opts.bounds_tol) * lower as f64 => {
                    ((lower as f64) * (upper as f64)).sqrt()
                }
                Count::Bounds { .. } => return None,
            };
            Some((c.epsilon, v))
        })
        .collect();
    fit_points(&points, model, opts)
}

/// Fits `-log p_hat` against `eps` over usable points. `-log p` plays the
/// role of `N`, while the decade span is measured on `p_hat` itself.
pub fn fit_small_deviation(est: &SmallDevEstimate, model: FitModel, opts: &FitOptions) -> Result<RateFit> {
    let usable: Vec<_> = est.points.iter().filter(|p| p.usable()).collect();
    let decades = span_decades(usable.iter().map(|p| p.p_hat.ln()));
    let points = in_domain(
        usable.iter().filter_map(|p| p.minus_log_p.filter(|&m| m > 0.0).map(|m| (p.epsilon, m.ln()))),
        model,
    );
    check_enough(points.len(), decades, opts)?;
    fit_usable(&points, model, decades)
}
