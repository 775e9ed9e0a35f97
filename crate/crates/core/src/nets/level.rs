//! Level nets on `(N, dbar)` and the full-level tree nets they induce.

use super::{check_upper_domination, integrate_pieces, phi64, Rho};
use crate::covering::{check_eps, Construction, CoverCertificate, CoverKind};
use crate::error::{Error, Result};
use crate::metric::{DecayProfile, MetricEvaluator};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// `2 eps`-net of `(N, dbar)`: all levels up to `phi^{-1}(eps)`, then the
/// integer parts of `Phi^{-1}(k eps)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelNet {
    pub epsilon: f64,
    /// `M_eps = {1, ..., m_max}`.
    pub m_max: u64,
    pub u_tilde: Vec<f64>,
    pub u: Vec<u64>,
    pub n: usize,
    /// Whether `u_N` was moved to `floor(phi^{-1}(eps)) + 1`.
    pub u_last_patched: bool,
    /// Levels added because the scan found them uncovered.
    pub patches: Vec<u64>,
    /// Largest level scanned.
    pub scanned_to: u64,
}

impl LevelNet {
    pub fn m_eps(&self) -> std::ops::RangeInclusive<u64> {
        1..=self.m_max
    }

    /// Sorted levels of the net, patches included.
    pub fn levels(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.m_eps().chain(self.u.iter().copied()).chain(self.patches.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn len(&self) -> usize {
        self.levels().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds the level net and scans `n = 1, 2, ...` for coverage at `2 eps`,
/// patching uncovered levels. Without a horizon the scan stops once the tail
/// beyond the last net point is covered analytically.
pub fn level_net<F: Scalar>(profile: &DecayProfile<F>, eps: F, horizon: Option<u64>) -> Result<LevelNet> {
    check_eps(eps)?;
    let inv = profile.phi_inv(eps);
    let m_max = if inv >= F::one() { inv.floor().to_f64_lossy() as u64 } else { 0 };
    let start = inv.max(F::zero());
    let ratio = profile.Phi(start) / eps;
    let n = if ratio >= F::one() { ratio.floor().to_f64_lossy() as usize } else { 0 };
    let u_tilde: Vec<F> = (1..=n).map(|k| profile.Phi_inv(F::of_usize(k) * eps)).collect();
    for k in 1..n {
        if !(u_tilde[k - 1] - u_tilde[k] > F::one()) {
            return Err(Error::Verification(format!(
                "consecutive level points {} and {} are not more than 1 apart",
                u_tilde[k - 1],
                u_tilde[k]
            )));
        }
    }
    let mut u: Vec<u64> = u_tilde.iter().map(|x| x.floor().to_f64_lossy() as u64).collect();
    let mut u_last_patched = false;
    if let Some(last) = u.last_mut() {
        if F::of_usize(*last as usize) < inv {
            *last = m_max + 1;
            u_last_patched = true;
        }
    }
    let mut net = LevelNet {
        epsilon: eps.to_f64_lossy(),
        m_max,
        u_tilde: u_tilde.iter().map(|x| x.to_f64_lossy()).collect(),
        u,
        n,
        u_last_patched,
        patches: Vec::new(),
        scanned_to: 0,
    };
    scan(profile, eps, horizon, &mut net)?;
    Ok(net)
}

fn scan<F: Scalar>(profile: &DecayProfile<F>, eps: F, horizon: Option<u64>, net: &mut LevelNet) -> Result<()> {
    let two = eps + eps;
    let pts = net.levels();
    let mut idx = 0;
    let mut cur: Option<u64> = None;
    let mut k: u64 = 1;
    loop {
        if horizon.is_some_and(|h| k > h) {
            break;
        }
        while idx < pts.len() && pts[idx] <= k {
            cur = Some(pts[idx]);
            idx += 1;
        }
        if idx == pts.len() {
            if let Some(c) = cur {
                if profile.Phi(F::of_usize(c as usize)) < two {
                    break;
                }
            }
        }
        let covered = match cur {
            Some(c) => profile.dbar(F::of_usize(c as usize), F::of_usize(k as usize))? < two,
            None => false,
        };
        if !covered {
            net.patches.push(k);
            cur = Some(k);
        }
        net.scanned_to = k;
        k += 1;
        if k > 1 << 40 {
            return Err(Error::Verification("level scan does not terminate".into()));
        }
    }
    Ok(())
}

/// All nodes whose level lies in the level net at `eps^q`, plus the root;
/// an order net at radius `2^{1/q} eps`.
pub fn tree_net_from_levels<F: Scalar + Serialize>(
    me: &MetricEvaluator<F>,
    profile: &DecayProfile<F>,
    eps: F,
) -> Result<(LevelNet, CoverCertificate<F>)> {
    check_eps(eps)?;
    check_upper_domination(me, profile)?;
    let tree = me.tree();
    let q = me.q();
    let levels = level_net(profile, eps.pow_q(q), Some(tree.height() as u64))?;
    let mut centers = vec![crate::tree::NodeId::ROOT];
    for l in levels.levels() {
        if l <= tree.height() as u64 {
            centers.extend(tree.level(l as u32));
        }
    }
    let radius = F::lit(2.0).root_q(q) * eps;
    let mut cert = CoverCertificate::checked(me, CoverKind::Order, radius, centers);
    cert.construction = Some(Construction::LevelNet);
    Ok((levels, cert))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop7Mode {
    /// Third integral over `[phi^{-1}, Phi^{-1}]`.
    General,
    /// Third integral over `[phi^{-1}, inf)`; needs `int rho phi < inf`.
    Convergent,
    /// Third integral over `[1, Phi^{-1}]`.
    Divergent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop7Bound {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub total: f64,
}

/// Upper bound on the order covering number from level sizes `R <= rho`.
pub fn prop7_bound<F: Scalar>(rho: &Rho, profile: &DecayProfile<F>, q: f64, eps: f64, mode: Prop7Mode) -> Result<Prop7Bound> {
    check_eps(eps)?;
    let y = eps.powf(q) / 2.0;
    let a = profile.phi_inv(F::lit(y)).to_f64_lossy();
    let b = profile.Phi_inv(F::lit(y)).to_f64_lossy();
    let term1 = rho.integral(0.0, (a + 1.0).max(0.0));
    let term2 = rho.eval(b);
    let f = |x: f64| rho.eval(x) * phi64(profile, x);
    let integral = match mode {
        Prop7Mode::General => integrate_pieces(f, a.max(0.0), b),
        Prop7Mode::Divergent => integrate_pieces(f, 1.0, b),
        Prop7Mode::Convergent => {
            if !rho.converges_against(profile) {
                return Err(Error::Domain("int rho phi diverges, convergent form does not apply".into()));
            }
            crate::quad::integrate_to_infinity(f, a.max(0.0))
        }
    };
    let term3 = 2.0 * integral / eps.powf(q);
    Ok(Prop7Bound { term1, term2, term3, total: term1 + term2 + term3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::min_order_net;
    use crate::tree::Tree;
    use crate::weights::{WeightLaw, WeightSystem};

    fn inv_square() -> DecayProfile<f64> {
        DecayProfile::polynomial(2.0, 1.0).unwrap()
    }

    #[test]
    fn worked_level_net() {
        let net = level_net(&inv_square(), 0.1, None).unwrap();
        assert_eq!(net.m_max, 3);
        assert_eq!(net.n, 3);
        assert_eq!(net.u, vec![10, 5, 4]);
        assert!(net.u_last_patched);
        assert!((net.u_tilde[2] - 10.0 / 3.0).abs() < 1e-9);
        assert!(net.patches.is_empty());
        // direct oracle: nearest net point below each level
        let pts = net.levels();
        for k in 1..=10_000u64 {
            let w = *pts.iter().filter(|&&p| p <= k).max().unwrap();
            let d = 1.0 / w as f64 - 1.0 / k as f64;
            assert!(d < 0.2, "level {k}");
        }
    }

    #[test]
    fn large_eps_keeps_level_one() {
        let p = inv_square();
        let net = level_net(&p, 1.0, None).unwrap();
        assert_eq!(net.levels()[0], 1);
        let net = level_net(&p, 3.0, None).unwrap();
        assert_eq!(net.m_max, 0);
        assert_eq!(net.levels(), vec![1]);
    }

    #[test]
    fn prop7_worked_value() {
        let b = prop7_bound(&Rho::Polynomial { lambda: 0.0, scale: 1.0 }, &inv_square(), 1.0, 0.1, Prop7Mode::General)
            .unwrap();
        assert!((b.term1 - (20f64.sqrt() + 1.0)).abs() < 1e-9);
        assert_eq!(b.term2, 1.0);
        assert!((b.term3 - 20.0 * (1.0 / 20f64.sqrt() - 0.05)).abs() < 1e-9);
        assert!((b.total - 9.95).abs() < 0.01, "{b:?}");
        let conv = prop7_bound(&Rho::Polynomial { lambda: 0.0, scale: 1.0 }, &inv_square(), 1.0, 0.1, Prop7Mode::Convergent)
            .unwrap();
        assert!(conv.term3 > b.term3);
        assert!(prop7_bound(&Rho::Binary, &inv_square(), 2.0, 0.1, Prop7Mode::Convergent).is_err());
    }

    #[test]
    fn path_net_is_one_node_per_level() {
        let t = Tree::path(40).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(2.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let (levels, cert) = tree_net_from_levels(&me, &inv_square(), 0.3).unwrap();
        assert!(cert.verified);
        let want = 1 + levels.levels().iter().filter(|&&l| l < 40).count();
        assert_eq!(cert.len(), want);
    }

    #[test]
    fn binary_net_verifies_and_bounds_minimum() {
        let t = Tree::binary(16).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(3.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let p = DecayProfile::polynomial(3.0, 1.0).unwrap();
        let (_, cert) = tree_net_from_levels(&me, &p, 0.4).unwrap();
        assert!(cert.verified);
        assert!(min_order_net(&me, cert.epsilon).unwrap().len() <= cert.len());
    }

    #[test]
    fn domination_failure_names_witness() {
        let t = Tree::path(5).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(1.5), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let err = tree_net_from_levels(&me, &inv_square(), 0.3).unwrap_err();
        assert!(matches!(err, Error::Hypothesis { .. }), "{err}");
    }
}
