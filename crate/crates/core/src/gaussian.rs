//! Monte Carlo for the tree-indexed Gaussian field
//! `X_t = sigma(t) sum_{r <= t} alpha(r) xi_r`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{NodeId, Tree};
use crate::weights::WeightSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Successes below this make a point unusable for fitting.
pub const MIN_SUCCESSES: u64 = 30;
/// Advisory band for `p_hat`.
pub const P_BAND: (f64, f64) = (1e-4, 0.9);
pub const Z_95: f64 = 1.96;

/// `E X_t X_s = sigma(t) sigma(s) sum_{r <= t ^ s} alpha(r)^2`.
pub fn covariance<F: Scalar>(tree: &Tree, ws: &WeightSystem<F>, t: NodeId, s: NodeId) -> F {
    let m = tree.meet(t, s);
    let sum: F = tree.path_up(m).map(|r| ws.alpha(r) * ws.alpha(r)).sum();
    ws.sigma(t) * ws.sigma(s) * sum
}

#[derive(Clone, Debug)]
pub struct GaussianRun<'a> {
    pub tree: &'a Tree,
    pub ws: &'a WeightSystem<f64>,
    pub seed: u64,
    pub n_samples: usize,
    pub eps_grid: Vec<f64>,
}

/// Generator for sample `index`: one ChaCha stream per sample, so results do
/// not depend on how samples are split across threads.
fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl<'a> GaussianRun<'a> {
    pub fn new(tree: &'a Tree, ws: &'a WeightSystem<f64>, seed: u64, n_samples: usize, eps_grid: Vec<f64>) -> Result<Self> {
        if ws.q() != 2.0 {
            return Err(Error::InvalidParameter(format!("the Gaussian field needs q = 2, got {}", ws.q())));
        }
        if n_samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {e}")));
        }
        Ok(GaussianRun { tree, ws, seed, n_samples, eps_grid })
    }

    /// Field values of sample `index`, in node order.
    pub fn sample_field(&self, index: usize) -> Vec<f64> {
        let mut rng = sample_rng(self.seed, index);
        let n = self.tree.len();
        let mut partial = vec![0.0; n];
        let mut x = vec![0.0; n];
        for i in 0..n {
            let t = NodeId(i as u32);
            let xi: f64 = rng.sample(StandardNormal);
            let above = self.tree.parent(t).map_or(0.0, |p| partial[p.index()]);
            partial[i] = above + self.ws.alpha(t) * xi;
            x[i] = self.ws.sigma(t) * partial[i];
        }
        x
    }

    fn sup_of(&self, index: usize, partial: &mut [f64]) -> f64 {
        let mut rng = sample_rng(self.seed, index);
        let alpha = self.ws.alphas();
        let sigma = self.ws.sigmas();
        let mut sup: f64 = 0.0;
        for i in 0..partial.len() {
            let xi: f64 = rng.sample(StandardNormal);
            let above = if i == 0 { 0.0 } else { partial[self.tree.parent_raw(i) as usize] };
            partial[i] = above + alpha[i] * xi;
            sup = sup.max((sigma[i] * partial[i]).abs());
        }
        sup
    }

    /// Field values `X_t` for `t < k` of sample `index`; the draws match
    /// [`Self::sample_field`].
    fn field_prefix(&self, index: usize, k: usize, partial: &mut [f64], out: &mut [f64]) {
        let mut rng = sample_rng(self.seed, index);
        let alpha = self.ws.alphas();
        let sigma = self.ws.sigmas();
        for i in 0..k {
            let xi: f64 = rng.sample(StandardNormal);
            let above = if i == 0 { 0.0 } else { partial[self.tree.parent_raw(i) as usize] };
            partial[i] = above + alpha[i] * xi;
            out[i] = sigma[i] * partial[i];
        }
    }

    /// Empirical `E X_t X_s` over all samples against the closed form.
    pub fn covariance_check(&self, pairs: &[(NodeId, NodeId)]) -> Vec<CovCheck> {
        let k = pairs.iter().map(|&(t, s)| t.index().max(s.index()) + 1).max().unwrap_or(0);
        let products: Vec<Vec<f64>> = (0..self.n_samples)
            .into_par_iter()
            .map_init(
                || (vec![0.0; k], vec![0.0; k]),
                |(partial, x), idx| {
                    self.field_prefix(idx, k, partial, x);
                    pairs.iter().map(|&(t, s)| x[t.index()] * x[s.index()]).collect()
                },
            )
            .collect();
        let n = self.n_samples as f64;
        pairs
            .iter()
            .enumerate()
            .map(|(j, &(t, s))| {
                let mean = products.iter().map(|p| p[j]).sum::<f64>() / n;
                let var = products.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                let exact = covariance(self.tree, self.ws, t, s);
                let std_err = (var / n).sqrt();
                CovCheck { t, s, exact, empirical: mean, std_err, z: (mean - exact) / std_err }
            })
            .collect()
    }

    /// `sup_t |X_t|` for every sample, in sample order.
    pub fn sample_sup(&self) -> Vec<f64> {
        let n = self.tree.len();
        (0..self.n_samples)
            .into_par_iter()
            .map_init(|| vec![0.0; n], |buf, k| self.sup_of(k, buf))
            .collect()
    }

    pub fn small_deviation(&self) -> SmallDevEstimate {
        let mut sups = self.sample_sup();
        sups.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = self.n_samples as u64;
        let points = self
            .eps_grid
            .iter()
            .map(|&eps| {
                let successes = sups.partition_point(|&s| s < eps) as u64;
                SmallDevPoint::new(eps, successes, n)
            })
            .collect();
        SmallDevEstimate { seed: self.seed, n_samples: n, points }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovCheck {
    pub t: NodeId,
    pub s: NodeId,
    pub exact: f64,
    pub empirical: f64,
    pub std_err: f64,
    /// `(empirical - exact) / std_err`.
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdFlag {
    Ok,
    /// No sample fell inside the ball.
    ZeroSuccesses,
    /// Fewer than [`MIN_SUCCESSES`] successes.
    FewSuccesses,
    /// `p_hat` outside [`P_BAND`].
    OutsideBand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallDevPoint {
    pub epsilon: f64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub minus_log_p: Option<f64>,
    pub flag: SdFlag,
}

impl SmallDevPoint {
    fn new(epsilon: f64, successes: u64, n: u64) -> Self {
        let p_hat = successes as f64 / n as f64;
        let (ci_lo, ci_hi) = wilson(successes, n, Z_95);
        let flag = if successes == 0 {
            SdFlag::ZeroSuccesses
        } else if successes < MIN_SUCCESSES {
            SdFlag::FewSuccesses
        } else if p_hat < P_BAND.0 || p_hat > P_BAND.1 {
            SdFlag::OutsideBand
        } else {
            SdFlag::Ok
        };
        let minus_log_p = (successes > 0).then(|| -p_hat.ln());
        SmallDevPoint { epsilon, successes, p_hat, ci_lo, ci_hi, minus_log_p, flag }
    }

    pub fn usable(&self) -> bool {
        self.flag == SdFlag::Ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallDevEstimate {
    pub seed: u64,
    pub n_samples: u64,
    pub points: Vec<SmallDevPoint>,
}

impl SmallDevEstimate {
    /// `epsilon,p_hat,ci_lo,ci_hi,minus_log_p,flag`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["epsilon", "p_hat", "ci_lo", "ci_hi", "minus_log_p", "flag"])?;
        for p in &self.points {
            let flag = serde_json::to_value(p.flag)?.as_str().unwrap_or_default().to_owned();
            out.write_record([
                p.epsilon.to_string(),
                p.p_hat.to_string(),
                p.ci_lo.to_string(),
                p.ci_hi.to_string(),
                p.minus_log_p.map(|v| v.to_string()).unwrap_or_default(),
                flag,
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
