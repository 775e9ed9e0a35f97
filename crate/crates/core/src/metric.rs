//! The tree metric `d` and the one-dimensional distance `dbar`.

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Scalar;
use crate::tree::{NodeId, Tree};
use crate::weights::WeightSystem;
use std::sync::Arc;

/// Evaluates `d(t, s)` using the prefix sums `A(t) = sum_{r <= t} alpha(r)^q`.
///
/// For comparable `t <= s` the value is `max_{v in (t,s]} (A(v) - A(t))^(1/q) sigma(v)`;
/// incomparable pairs go through their meet.
#[derive(Clone, Debug)]
pub struct MetricEvaluator<'a, F> {
    tree: &'a Tree,
    ws: &'a WeightSystem<F>,
    prefix: Vec<F>,
}

impl<'a, F: Scalar> MetricEvaluator<'a, F> {
    pub fn new(tree: &'a Tree, ws: &'a WeightSystem<F>) -> Result<Self> {
        if tree.len() != ws.len() {
            return Err(Error::InvalidParameter(format!(
                "weights cover {} nodes, tree has {}",
                ws.len(),
                tree.len()
            )));
        }
        let q = ws.q();
        let alpha = ws.alphas();
        let mut prefix = vec![F::zero(); tree.len()];
        for i in 0..tree.len() {
            let up = if i == 0 { F::zero() } else { prefix[tree.parent_raw(i) as usize] };
            prefix[i] = up + alpha[i].pow_q(q);
        }
        Ok(MetricEvaluator { tree, ws, prefix })
    }

    pub fn tree(&self) -> &'a Tree {
        self.tree
    }

    pub fn weights(&self) -> &'a WeightSystem<F> {
        self.ws
    }

    pub fn q(&self) -> F {
        self.ws.q()
    }

    #[inline]
    pub fn prefix(&self, t: NodeId) -> F {
        self.prefix[t.index()]
    }

    pub(crate) fn prefixes(&self) -> &[F] {
        &self.prefix
    }

    /// Contribution of node `v` to `d(anchor, .)` for any descendant of `v`.
    #[inline]
    pub(crate) fn step(&self, anchor_prefix: F, v: usize) -> F {
        (self.prefix[v] - anchor_prefix).root_q(self.ws.q()) * self.ws.sigmas()[v]
    }

    /// `d(t, s)` for `t <= s`; the caller guarantees comparability.
    pub(crate) fn dist_down(&self, t: NodeId, s: NodeId) -> F {
        let base = self.prefix[t.index()];
        let mut best = F::zero();
        let mut cur = s.0;
        while cur != t.0 {
            best = best.max(self.step(base, cur as usize));
            cur = self.tree.parent_raw(cur as usize);
        }
        best
    }

    pub fn dist(&self, t: NodeId, s: NodeId) -> F {
        if t == s {
            return F::zero();
        }
        let m = self.tree.meet(t, s);
        if m == t {
            self.dist_down(t, s)
        } else if m == s {
            self.dist_down(s, t)
        } else {
            self.dist_down(m, t) + self.dist_down(m, s)
        }
    }

    /// Full distance matrix, row-major.
    pub fn matrix(&self) -> Vec<F> {
        let n = self.tree.len();
        let mut out = vec![F::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist(NodeId(i as u32), NodeId(j as u32));
                out[i * n + j] = d;
                out[j * n + i] = d;
            }
        }
        out
    }

    /// Members of the open ball `{r : d(p, r) < radius}` in discovery order.
    pub fn ball(&self, p: NodeId, radius: F) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.for_each_in_ball(p, radius, |r, _| out.push(r));
        out
    }

    /// Calls `f(r, d(p, r))` for every `r` with `d(p, r) < radius`.
    pub fn for_each_in_ball(&self, p: NodeId, radius: F, mut f: impl FnMut(NodeId, F)) {
        if !(radius > F::zero()) {
            return;
        }
        let mut below: u32 = u32::MAX;
        let mut m = p.0;
        loop {
            let dm = self.dist_down(NodeId(m), p);
            if !(dm < radius) {
                break;
            }
            f(NodeId(m), dm);
            let base = self.prefix[m as usize];
            let mut stack: Vec<(u32, F)> = self
                .tree
                .children_raw(m as usize)
                .iter()
                .filter(|&&c| c != below)
                .map(|&c| (c, F::zero()))
                .collect();
            while let Some((u, parent_d)) = stack.pop() {
                let du = parent_d.max(self.step(base, u as usize));
                if dm + du < radius {
                    f(NodeId(u), dm + du);
                    stack.extend(self.tree.children_raw(u as usize).iter().map(|&c| (c, du)));
                }
            }
            if m == 0 {
                break;
            }
            below = m;
            m = self.tree.parent_raw(m as usize);
        }
    }
}

#[derive(Clone)]
pub enum DecayKind<F> {
    /// `phi(x) = c x^(-gamma)`, `gamma > 1`.
    Polynomial { gamma: F, c: F },
    /// `phi(x) = c 2^(-gamma x)`.
    Exponential { gamma: F, c: F },
    Numeric { phi: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl<F: std::fmt::Debug> std::fmt::Debug for DecayKind<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecayKind::Polynomial { gamma, c } => write!(f, "Polynomial {{ gamma: {gamma:?}, c: {c:?} }}"),
            DecayKind::Exponential { gamma, c } => write!(f, "Exponential {{ gamma: {gamma:?}, c: {c:?} }}"),
            DecayKind::Numeric { .. } => write!(f, "Numeric"),
        }
    }
}

/// Decreasing integrable `phi` with its tail integral `Phi(y) = int_y^inf phi`.
#[derive(Clone, Debug)]
pub struct DecayProfile<F> {
    pub kind: DecayKind<F>,
    /// `kappa` with `phi(x) <= kappa phi(2x)`.
    pub doubling: Option<F>,
}

const BISECT_REL: f64 = 1e-12;

impl<F: Scalar> DecayProfile<F> {
    pub fn polynomial(gamma: F, c: F) -> Result<Self> {
        if !(gamma > F::one() && c > F::zero()) {
            return Err(Error::InvalidParameter(format!("polynomial decay needs gamma > 1 and c > 0, got {gamma}, {c}")));
        }
        Ok(DecayProfile { kind: DecayKind::Polynomial { gamma, c }, doubling: Some(F::lit(2.0).powf(gamma)) })
    }

    pub fn exponential(gamma: F, c: F) -> Result<Self> {
        if !(gamma > F::zero() && c > F::zero()) {
            return Err(Error::InvalidParameter(format!("exponential decay needs gamma > 0 and c > 0, got {gamma}, {c}")));
        }
        Ok(DecayProfile { kind: DecayKind::Exponential { gamma, c }, doubling: None })
    }

    pub fn numeric(phi: impl Fn(f64) -> f64 + Send + Sync + 'static, doubling: Option<F>) -> Self {
        DecayProfile { kind: DecayKind::Numeric { phi: Arc::new(phi) }, doubling }
    }

    pub fn phi(&self, x: F) -> F {
        match &self.kind {
            DecayKind::Polynomial { gamma, c } => *c * x.powf(-*gamma),
            DecayKind::Exponential { gamma, c } => *c * F::lit(2.0).powf(-*gamma * x),
            DecayKind::Numeric { phi } => F::lit(phi(x.to_f64_lossy())),
        }
    }

    #[allow(non_snake_case)]
    pub fn Phi(&self, y: F) -> F {
        if y.is_infinite() {
            return F::zero();
        }
        match &self.kind {
            DecayKind::Polynomial { gamma, c } => *c * y.powf(F::one() - *gamma) / (*gamma - F::one()),
            DecayKind::Exponential { gamma, c } => {
                *c * F::lit(2.0).powf(-*gamma * y) / (*gamma * F::lit(std::f64::consts::LN_2))
            }
            DecayKind::Numeric { phi } => {
                let y = y.to_f64_lossy();
                if y < 0.0 {
                    return F::infinity();
                }
                F::lit(quad::integrate_to_infinity(|x| phi(x), y))
            }
        }
    }

    /// Inverse of `phi` on `(0, inf)`; may be negative for exponential decay.
    pub fn phi_inv(&self, y: F) -> F {
        match &self.kind {
            DecayKind::Polynomial { gamma, c } => (*c / y).powf(gamma.recip()),
            DecayKind::Exponential { gamma, c } => (*c / y).log2() / *gamma,
            DecayKind::Numeric { .. } => bisect_decreasing(|x| self.phi(x), y),
        }
    }

    #[allow(non_snake_case)]
    pub fn Phi_inv(&self, z: F) -> F {
        match &self.kind {
            DecayKind::Polynomial { gamma, c } => {
                (*c / ((*gamma - F::one()) * z)).powf((*gamma - F::one()).recip())
            }
            DecayKind::Exponential { gamma, c } => {
                (*c / (*gamma * F::lit(std::f64::consts::LN_2) * z)).log2() / *gamma
            }
            DecayKind::Numeric { .. } => bisect_decreasing(|x| self.Phi(x), z),
        }
    }

    /// `Phi(y1) - Phi(y2)` for `0 <= y1 <= y2 <= inf`.
    pub fn dbar(&self, y1: F, y2: F) -> Result<F> {
        if !(y1 >= F::zero() && y1 <= y2) {
            return Err(Error::InvalidParameter(format!("dbar needs 0 <= y1 <= y2, got ({y1}, {y2})")));
        }
        if y1 == y2 {
            return Ok(F::zero());
        }
        Ok(self.Phi(y1) - self.Phi(y2))
    }

    /// Samples `phi(x) <= kappa phi(2x)` on `[x0, x1]`.
    pub fn satisfies_doubling(&self, x0: F, x1: F, samples: usize) -> bool {
        let Some(kappa) = self.doubling else { return false };
        (0..samples).all(|k| {
            let x = x0 + (x1 - x0) * F::of_usize(k) / F::of_usize(samples.max(2) - 1);
            self.phi(x) <= kappa * self.phi(x + x) * (F::one() + F::lit(1e-12))
        })
    }
}

/// Solves `g(x) = target` for decreasing `g` on `(0, inf)`.
fn bisect_decreasing<F: Scalar>(g: impl Fn(F) -> F, target: F) -> F {
    let mut lo = F::one();
    let mut hi = F::one();
    while g(lo) < target && lo > F::lit(1e-300) {
        lo = lo / F::lit(2.0);
    }
    while g(hi) > target && hi < F::lit(1e300) {
        hi = hi * F::lit(2.0);
    }
    for _ in 0..2000 {
        let mid = (lo + hi) / F::lit(2.0);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= F::lit(BISECT_REL) * hi {
            break;
        }
    }
    (lo + hi) / F::lit(2.0)
}
