//! Weight systems `(alpha, sigma, q)` on trees.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{NodeId, Tree, TreeKind};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightLaw<F> {
    Constant { c: F },
    /// `c * max(1, |t|)^(-gamma/q)`.
    Polynomial { gamma: F, c: F },
    /// `c * 2^(-gamma |t| / q)`.
    Exponential { gamma: F, c: F },
    PerLevel { table: Vec<F> },
    PerNode { table: Vec<F> },
}

impl<F: Scalar> WeightLaw<F> {
    pub fn constant(c: F) -> Self {
        WeightLaw::Constant { c }
    }

    pub fn polynomial(gamma: F) -> Self {
        WeightLaw::Polynomial { gamma, c: F::one() }
    }

    pub fn exponential(gamma: F) -> Self {
        WeightLaw::Exponential { gamma, c: F::one() }
    }

    pub fn is_level_based(&self) -> bool {
        !matches!(self, WeightLaw::PerNode { .. })
    }

    /// Value at level `n`; `None` for per-node tables.
    pub fn level_value(&self, n: u32, q: F) -> Option<F> {
        match self {
            WeightLaw::Constant { c } => Some(*c),
            WeightLaw::Polynomial { gamma, c } => {
                let m = F::of_usize(n.max(1) as usize);
                Some(*c * m.powf(-*gamma / q))
            }
            WeightLaw::Exponential { gamma, c } => {
                Some(*c * F::lit(2.0).powf(-*gamma * F::of_usize(n as usize) / q))
            }
            WeightLaw::PerLevel { table } => table.get(n as usize).copied(),
            WeightLaw::PerNode { .. } => None,
        }
    }

    fn node_values(&self, tree: &Tree, q: F, name: &str) -> Result<Vec<F>> {
        let values: Vec<F> = match self {
            WeightLaw::PerNode { table } => {
                if table.len() != tree.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{name} table has {} entries for {} nodes",
                        table.len(),
                        tree.len()
                    )));
                }
                table.clone()
            }
            WeightLaw::PerLevel { table } if table.len() <= tree.height() as usize => {
                return Err(Error::InvalidParameter(format!(
                    "{name} table covers {} levels, tree has {}",
                    table.len(),
                    tree.height() + 1
                )));
            }
            _ => {
                let levels: Vec<F> =
                    (0..=tree.height()).map(|n| self.level_value(n, q).unwrap()).collect();
                tree.depths().iter().map(|&d| levels[d as usize]).collect()
            }
        };
        if let Some(i) = values.iter().position(|v| !(*v > F::zero() && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, node {i} has {}",
                values[i]
            )));
        }
        Ok(values)
    }
}

/// Per-level weight tables for trees whose weights depend only on depth.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelWeights<F> {
    pub alpha: Vec<F>,
    pub sigma: Vec<F>,
    pub q: F,
}

impl<F: Scalar> LevelWeights<F> {
    pub fn from_laws(alpha: &WeightLaw<F>, sigma: &WeightLaw<F>, q: F, depth: u32) -> Result<Self> {
        let table = |law: &WeightLaw<F>| -> Result<Vec<F>> {
            (0..=depth)
                .map(|n| {
                    law.level_value(n, q)
                        .ok_or_else(|| Error::Domain("weights are not level-dependent".into()))
                })
                .collect()
        };
        Ok(LevelWeights { alpha: table(alpha)?, sigma: table(sigma)?, q })
    }

    /// `max_{n1 < v <= n2} (sum_{n1 < k <= v} alpha_k^q)^(1/q) sigma_v`.
    pub fn radial_dist(&self, n1: usize, n2: usize) -> Result<F> {
        if n1 > n2 || n2 >= self.alpha.len() {
            return Err(Error::InvalidParameter(format!("need n1 <= n2 < {}, got ({n1}, {n2})", self.alpha.len())));
        }
        let mut acc = F::zero();
        let mut best = F::zero();
        for v in n1 + 1..=n2 {
            acc = acc + self.alpha[v].pow_q(self.q);
            best = best.max(acc.root_q(self.q) * self.sigma[v]);
        }
        Ok(best)
    }
}

#[derive(Clone, Debug)]
pub struct WeightSystem<F> {
    alpha: Vec<F>,
    sigma: Vec<F>,
    q: F,
    sigma_root_scale: F,
    one_weight: bool,
    levels: Option<LevelWeights<F>>,
}

impl<F: Scalar> WeightSystem<F> {
    /// Evaluates both laws on `tree`. `q >= 1`; `sigma` must not increase
    /// along any edge.
    pub fn assign(tree: &Tree, alpha_law: &WeightLaw<F>, sigma_law: &WeightLaw<F>, q: F) -> Result<Self> {
        if !(q >= F::one() && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must lie in [1, inf), got {q}")));
        }
        let alpha = alpha_law.node_values(tree, q, "alpha")?;
        let sigma = sigma_law.node_values(tree, q, "sigma")?;
        let levels = if alpha_law.is_level_based() && sigma_law.is_level_based() {
            Some(LevelWeights::from_laws(alpha_law, sigma_law, q, tree.height())?)
        } else {
            None
        };
        Self::from_parts(tree, alpha, sigma, q, levels)
    }

    pub fn from_tables(tree: &Tree, alpha: Vec<F>, sigma: Vec<F>, q: F) -> Result<Self> {
        Self::assign(tree, &WeightLaw::PerNode { table: alpha }, &WeightLaw::PerNode { table: sigma }, q)
    }

    fn from_parts(tree: &Tree, alpha: Vec<F>, sigma: Vec<F>, q: F, levels: Option<LevelWeights<F>>) -> Result<Self> {
        let edges: Vec<(NodeId, NodeId)> = (1..tree.len())
            .filter(|&i| sigma[i] > sigma[tree.parent_raw(i) as usize])
            .map(|i| (NodeId(tree.parent_raw(i)), NodeId(i as u32)))
            .collect();
        if !edges.is_empty() {
            return Err(Error::SigmaNotMonotone { edges });
        }
        let one_weight = sigma.iter().all(|&s| s == sigma[0]);
        Ok(WeightSystem { sigma_root_scale: sigma[0], alpha, sigma, q, one_weight, levels })
    }

    /// Loads a `node_index,alpha,sigma` CSV (header optional).
    pub fn read_csv(tree: &Tree, path: impl AsRef<Path>, q: F) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(tree, &text, q)
    }

    pub fn from_csv_str(tree: &Tree, text: &str, q: F) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut alpha = vec![None; tree.len()];
        let mut sigma = vec![None; tree.len()];
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = k + 1;
            if k == 0 && rec.get(0).is_some_and(|f| f.parse::<usize>().is_err()) {
                continue;
            }
            if rec.len() != 3 {
                return Err(Error::WeightsFile { line, reason: format!("expected 3 fields, got {}", rec.len()) });
            }
            let bad = |e: String| Error::WeightsFile { line, reason: e };
            let i: usize = rec[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
            let a: f64 = rec[1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            let s: f64 = rec[2].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
            if i >= tree.len() {
                return Err(bad(format!("node {i} out of range")));
            }
            if alpha[i].is_some() {
                return Err(bad(format!("node {i} listed twice")));
            }
            alpha[i] = Some(F::lit(a));
            sigma[i] = Some(F::lit(s));
        }
        if let Some(i) = alpha.iter().position(Option::is_none) {
            return Err(Error::WeightsFile { line: 0, reason: format!("node {i} missing") });
        }
        Self::from_tables(
            tree,
            alpha.into_iter().map(Option::unwrap).collect(),
            sigma.into_iter().map(Option::unwrap).collect(),
            q,
        )
    }

    #[inline]
    pub fn alpha(&self, t: NodeId) -> F {
        self.alpha[t.index()]
    }

    #[inline]
    pub fn sigma(&self, t: NodeId) -> F {
        self.sigma[t.index()]
    }

    pub fn alphas(&self) -> &[F] {
        &self.alpha
    }

    pub fn sigmas(&self) -> &[F] {
        &self.sigma
    }

    pub fn q(&self) -> F {
        self.q
    }

    /// `sigma(root)`; normalized sigma is `sigma / scale`.
    pub fn sigma_root_scale(&self) -> F {
        self.sigma_root_scale
    }

    pub fn normalized_sigma(&self, t: NodeId) -> F {
        self.sigma[t.index()] / self.sigma_root_scale
    }

    /// Whether sigma is constant on the whole tree.
    pub fn is_one_weight(&self) -> bool {
        self.one_weight
    }

    pub fn level_weights(&self) -> Result<&LevelWeights<F>> {
        self.levels
            .as_ref()
            .ok_or_else(|| Error::Domain("weights are not level-dependent".into()))
    }

    /// Same alpha with sigma replaced by `table`.
    pub fn with_sigma(&self, tree: &Tree, sigma: Vec<F>) -> Result<Self> {
        Self::from_parts(tree, self.alpha.clone(), sigma, self.q, None)
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// `sup_s (sum_{r <= s} alpha(r)^q)^(1/q) sigma(s)`.
pub fn boundedness_statistic<F: Scalar>(ws: &WeightSystem<F>, tree: &Tree) -> F {
    let q = ws.q();
    let mut acc = vec![F::zero(); tree.len()];
    let mut best = F::zero();
    for i in 0..tree.len() {
        let up = if i == 0 { F::zero() } else { acc[tree.parent_raw(i) as usize] };
        acc[i] = up + ws.alpha[i].pow_q(q);
        best = best.max(acc[i].root_q(q) * ws.sigma[i]);
    }
    best
}

/// `sup_v ||alpha 1_[0,v]||_q ||sigma 1_[v,end]||_{p'}` on a path.
pub fn mazja_rosin_statistic<F: Scalar>(ws: &WeightSystem<F>, tree: &Tree, p: F) -> Result<F> {
    if !(matches!(tree.kind(), TreeKind::Path) || (0..=tree.height()).all(|n| tree.level_size(n) == 1)) {
        return Err(Error::Domain("the statistic is defined on paths only".into()));
    }
    let q = ws.q();
    if !(p >= F::one() && p <= q) {
        return Err(Error::InvalidParameter(format!("need 1 <= p <= q, got p = {p}")));
    }
    let n = tree.len();
    let p_conj = crate::scalar::conjugate(p);
    let mut tail = vec![F::zero(); n];
    if p_conj.is_infinite() {
        let mut m = F::zero();
        for v in (0..n).rev() {
            m = m.max(ws.sigma[v]);
            tail[v] = m;
        }
    } else {
        let mut s = F::zero();
        for v in (0..n).rev() {
            s = s + ws.sigma[v].powf(p_conj);
            tail[v] = s.powf(p_conj.recip());
        }
    }
    let mut acc = F::zero();
    let mut best = F::zero();
    for v in 0..n {
        acc = acc + ws.alpha[v].pow_q(q);
        best = best.max(acc.root_q(q) * tail[v]);
    }
    Ok(best)
}

/// Dyadic rounding of the normalized sigma.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicRounding<F> {
    /// `2^(-m(t))`, relative to `sigma(root) = 1`.
    pub sigma_hat: Vec<F>,
    /// `m(t)` with `2^(-m-1) < sigma(t) <= 2^(-m)`.
    pub level_of: Vec<u32>,
}

/// Exact `m` with `2^(-m-1) < x <= 2^(-m)` for `0 < x <= 1`.
pub fn dyadic_level<F: Scalar>(x: F) -> u32 {
    let (mantissa, exp, _) = x.integer_decode();
    let bits = 64 - mantissa.leading_zeros() as i32;
    let k = exp as i32 + bits - 1;
    let m = if mantissa.is_power_of_two() { -k } else { -(k + 1) };
    m.max(0) as u32
}

pub fn dyadic_round<F: Scalar>(ws: &WeightSystem<F>) -> DyadicRounding<F> {
    let scale = ws.sigma_root_scale();
    let level_of: Vec<u32> = ws.sigma.iter().map(|&s| dyadic_level(s / scale)).collect();
    let two = F::lit(2.0);
    let sigma_hat = level_of.iter().map(|&m| two.powi(-(m as i32))).collect();
    DyadicRounding { sigma_hat, level_of }
}
