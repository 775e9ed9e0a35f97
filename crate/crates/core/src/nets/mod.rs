//! Explicit net and separated-set constructions driven by a decay profile.

mod biased;
mod level;
mod lognet;
mod separated;

pub use biased::{biased_net, BiasedNetSpec, C_STAR_CAP, C_STAR_DEFAULT};
pub use level::{level_net, prop7_bound, tree_net_from_levels, LevelNet, Prop7Bound, Prop7Mode};
pub use lognet::{binary_lognet_counts, LogNetCounts};
pub use separated::{
    counterexample_weights, distbar_violation, p9a_bound, p9c_bound, separated_set_p9a, separated_set_p9c,
    SeparatedLevels,
};

use crate::error::{Error, Result};
use crate::metric::{DecayKind, DecayProfile, MetricEvaluator};
use crate::quad;
use crate::scalar::Scalar;
use crate::tree::NodeId;
use std::sync::Arc;

/// Level-size majorant or minorant `rho`.
#[derive(Clone)]
pub enum Rho {
    /// `scale * max(1, x)^lambda`.
    Polynomial { lambda: f64, scale: f64 },
    /// `2^x`.
    Binary,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Rho {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rho::Polynomial { lambda, scale } => write!(f, "Polynomial {{ lambda: {lambda}, scale: {scale} }}"),
            Rho::Binary => write!(f, "Binary"),
            Rho::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Rho {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Rho::Polynomial { lambda, scale } => scale * x.max(1.0).powf(*lambda),
            Rho::Binary => x.exp2(),
            Rho::Custom(f) => f(x),
        }
    }

    /// `int_a^b rho` for `0 <= a`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Rho::Polynomial { lambda, scale } => {
                let prim = |x: f64| {
                    if x <= 1.0 {
                        x
                    } else {
                        1.0 + (x.powf(lambda + 1.0) - 1.0) / (lambda + 1.0)
                    }
                };
                scale * (prim(b) - prim(a))
            }
            Rho::Binary => (b.exp2() - a.exp2()) / std::f64::consts::LN_2,
            Rho::Custom(f) => integrate_pieces(|x| f(x), a, b),
        }
    }

    /// Whether `int_1^inf rho phi` is finite, decided in closed form when possible.
    pub fn converges_against<F: Scalar>(&self, profile: &DecayProfile<F>) -> bool {
        match (self, &profile.kind) {
            (Rho::Polynomial { lambda, .. }, DecayKind::Polynomial { gamma, .. }) => lambda - gamma.to_f64_lossy() < -1.0,
            (Rho::Polynomial { .. }, DecayKind::Exponential { .. }) => true,
            (Rho::Binary, DecayKind::Polynomial { .. }) => false,
            (Rho::Binary, DecayKind::Exponential { gamma, .. }) => gamma.to_f64_lossy() > 1.0,
            _ => {
                let v = quad::integrate_to_infinity(|x| self.eval(x) * phi64(profile, x), 1.0);
                v.is_finite() && v < 1e300
            }
        }
    }
}

pub(crate) fn phi64<F: Scalar>(profile: &DecayProfile<F>, x: f64) -> f64 {
    profile.phi(F::lit(x)).to_f64_lossy()
}

/// Quadrature on unit-length pieces; integrands here vary over many orders
/// of magnitude across long ranges.
pub(crate) fn integrate_pieces(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let pieces = ((b - a).ceil() as usize).clamp(1, 4096);
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|i| quad::integrate(&f, a + i as f64 * h, a + (i + 1) as f64 * h)).sum()
}

const DOMINATION_TOL: f64 = 1e-12;

/// First node `t` with `|t| >= 1` violating `(alpha sigma)^q <= phi(|t|)`.
pub(crate) fn check_upper_domination<F: Scalar>(me: &MetricEvaluator<F>, profile: &DecayProfile<F>) -> Result<()> {
    domination(me, profile, true)
}

/// First node `t` with `|t| >= 1` violating `(alpha sigma)^q >= phi(|t|)`.
pub(crate) fn check_lower_domination<F: Scalar>(me: &MetricEvaluator<F>, profile: &DecayProfile<F>) -> Result<()> {
    domination(me, profile, false)
}

fn domination<F: Scalar>(me: &MetricEvaluator<F>, profile: &DecayProfile<F>, upper: bool) -> Result<()> {
    let tree = me.tree();
    let ws = me.weights();
    let q = ws.q();
    let tol = F::lit(DOMINATION_TOL);
    let mut phis: Vec<F> = Vec::new();
    for level in 1..=tree.height() {
        let p = profile.phi(F::of_usize(level as usize));
        phis.push(p);
        for t in tree.level(level) {
            let w = (ws.alpha(t) * ws.sigma(t)).pow_q(q);
            let ok = if upper { w <= p * (F::one() + tol) } else { w >= p * (F::one() - tol) };
            if !ok {
                let rel = if upper { "exceeds" } else { "is below" };
                return Err(Error::Hypothesis {
                    node: t,
                    detail: format!("(alpha sigma)^q = {w} {rel} phi({level}) = {p}"),
                });
            }
        }
    }
    Ok(())
}

/// `sigma` constant on the tree; returns a witness otherwise.
pub(crate) fn check_one_weight<F: Scalar>(me: &MetricEvaluator<F>) -> Result<()> {
    let ws = me.weights();
    let s0 = ws.sigma(NodeId::ROOT);
    match (0..me.tree().len()).map(|i| NodeId(i as u32)).find(|&t| ws.sigma(t) != s0) {
        None => Ok(()),
        Some(t) => Err(Error::Hypothesis { node: t, detail: "construction needs a constant sigma".into() }),
    }
}
