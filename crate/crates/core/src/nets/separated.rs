//! Separated sets certifying lower bounds on covering numbers.

use super::{check_lower_domination, check_one_weight, integrate_pieces, phi64, Rho};
use crate::covering::{check_eps, Construction, PackingCertificate};
use crate::error::{Error, Result};
use crate::metric::{DecayProfile, MetricEvaluator};
use crate::scalar::Scalar;
use crate::tree::{NodeId, Tree};
use crate::weights::WeightSystem;
use serde::{Deserialize, Serialize};

/// All nodes up to level `phi^{-1}(eps^q)`; `eps`-separated when
/// `(alpha sigma)^q >= phi`.
pub fn separated_set_p9a<F: Scalar>(
    me: &MetricEvaluator<F>,
    profile: &DecayProfile<F>,
    eps: F,
) -> Result<PackingCertificate<F>> {
    check_eps(eps)?;
    check_lower_domination(me, profile)?;
    let tree = me.tree();
    let top = profile.phi_inv(eps.pow_q(me.q()));
    let last = if top >= F::zero() { top.floor().to_f64_lossy().min(tree.height() as f64) as u32 } else { 0 };
    let points: Vec<NodeId> = (0..=last).flat_map(|l| tree.level(l)).collect();
    let mut cert = PackingCertificate::checked(me, eps, points);
    cert.construction = Some(Construction::P9a);
    Ok(cert)
}

/// `int_1^{phi^{-1}(eps^q) - 1} rho`.
pub fn p9a_bound<F: Scalar>(rho: &Rho, profile: &DecayProfile<F>, q: f64, eps: f64) -> f64 {
    let top = profile.phi_inv(F::lit(eps.powf(q))).to_f64_lossy() - 1.0;
    rho.integral(1.0, top)
}

/// Level bookkeeping of the chain construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedLevels {
    pub epsilon: f64,
    /// `N = floor(Phi(phi^{-1}(eps^q)) / eps^q)`.
    pub n_points: u64,
    /// `v_k = floor(Phi^{-1}(3k eps^q)) + 1` for `k = 1..=m`.
    pub v: Vec<u64>,
    pub m: u64,
    /// `R(v_k)` for `k = 2..=m`.
    pub sizes: Vec<u64>,
    /// `dbar(v_k + 1, v_{k-1}) >= eps^q` for every `k >= 2`.
    pub gaps_ok: bool,
    /// `m >= Phi(phi^{-1}(eps^q)) / (4 eps^q)`.
    pub low4_holds: bool,
}

/// Level arithmetic only, no tree needed.
pub(crate) fn chain_levels<F: Scalar>(profile: &DecayProfile<F>, q: F, eps: F) -> Result<SeparatedLevels> {
    let epsq = eps.pow_q(q);
    let low = profile.phi_inv(epsq).max(F::zero());
    let ratio = profile.Phi(low) / epsq;
    let n_points = if ratio >= F::one() { ratio.floor().to_f64_lossy() as u64 } else { 0 };
    let m = n_points / 3;
    let v: Vec<u64> = (1..=m)
        .map(|k| profile.Phi_inv(F::of_usize(3 * k as usize) * epsq).floor().to_f64_lossy() as u64 + 1)
        .collect();
    let mut gaps_ok = true;
    for k in 1..v.len() {
        let d = profile.dbar(F::of_usize(v[k] as usize + 1), F::of_usize(v[k - 1] as usize))?;
        gaps_ok &= d >= epsq;
    }
    let low4_holds = F::of_usize(m as usize) >= ratio / F::lit(4.0);
    Ok(SeparatedLevels { epsilon: eps.to_f64_lossy(), n_points, v, m, sizes: Vec::new(), gaps_ok, low4_holds })
}

/// One descendant at level `v_{k-1}` for every node at level `v_k`,
/// `k = 2..=m`; needs a constant `sigma`, `(alpha sigma)^q >= phi`, a
/// doubling profile and no leaves above level `v_1`.
pub fn separated_set_p9c<F: Scalar>(
    me: &MetricEvaluator<F>,
    profile: &DecayProfile<F>,
    eps: F,
) -> Result<(SeparatedLevels, PackingCertificate<F>)> {
    check_eps(eps)?;
    check_one_weight(me)?;
    check_lower_domination(me, profile)?;
    if profile.doubling.is_none() {
        return Err(Error::Domain("profile has no doubling constant".into()));
    }
    let tree = me.tree();
    let mut lv = chain_levels(profile, me.q(), eps)?;
    let mut points = Vec::new();
    if lv.m >= 2 {
        let top = lv.v[0];
        if top > tree.height() as u64 {
            return Err(Error::Domain(format!("construction needs depth {top}, tree has {}", tree.height())));
        }
        for l in 0..top as u32 {
            if let Some(t) = tree.level(l).find(|&t| tree.children(t).len() == 0) {
                return Err(Error::Hypothesis { node: t, detail: format!("leaf above level {top}") });
            }
        }
        for k in 1..lv.v.len() {
            let (from, to) = (lv.v[k] as u32, lv.v[k - 1] as u32);
            lv.sizes.push(tree.level_size(from));
            for t in tree.level(from) {
                let mut s = t;
                for _ in from..to {
                    s = tree.children(s).next().expect("no leaves above the top level");
                }
                points.push(s);
            }
        }
    }
    let mut cert = PackingCertificate::checked(me, eps, points);
    cert.construction = Some(Construction::P9c);
    Ok((lv, cert))
}

/// `4^{-1} eps^{-q} int_{phi^{-1}(eps^q)}^{Phi^{-1}(8 eps^q)} rho phi`.
pub fn p9c_bound<F: Scalar>(rho: &Rho, profile: &DecayProfile<F>, q: f64, eps: f64) -> f64 {
    let epsq = eps.powf(q);
    let a = profile.phi_inv(F::lit(epsq)).to_f64_lossy().max(0.0);
    let b = profile.Phi_inv(F::lit(8.0 * epsq)).to_f64_lossy();
    integrate_pieces(|x| rho.eval(x) * phi64(profile, x), a, b) / (4.0 * epsq)
}

/// Two-weight system with `(alpha sigma)^q = max(1,|t|)^{-gamma}` for which
/// `d(t, s)^q >= dbar(|t| + 1, |s|)` fails.
pub fn counterexample_weights(tree: &Tree, gamma: f64, q: f64) -> Result<WeightSystem<f64>> {
    let alpha = tree.depths().iter().map(|&n| (n as f64 / q).exp2()).collect();
    let sigma = tree.depths().iter().map(|&n| (n.max(1) as f64).powf(-gamma / q) * (-(n as f64) / q).exp2()).collect();
    WeightSystem::from_tables(tree, alpha, sigma, q)
}

/// First comparable pair `t < s` with `d(t, s)^q < dbar(|t| + 1, |s|)`.
pub fn distbar_violation<F: Scalar>(me: &MetricEvaluator<F>, profile: &DecayProfile<F>) -> Result<Option<(NodeId, NodeId)>> {
    let tree = me.tree();
    let q = me.q();
    for i in 0..tree.len() {
        let s = NodeId(i as u32);
        for t in tree.path_up(s).skip(1) {
            let lhs = me.dist(t, s).pow_q(q);
            let rhs = profile.dbar(F::of_usize(tree.depth(t) as usize + 1), F::of_usize(tree.depth(s) as usize))?;
            if lhs < rhs * (F::one() - F::lit(1e-12)) {
                return Ok(Some((t, s)));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightLaw;

    #[test]
    fn p9a_worked_example() {
        let t = Tree::binary(6).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(2.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let p = DecayProfile::polynomial(2.0, 1.0).unwrap();
        let cert = separated_set_p9a(&me, &p, 0.5).unwrap();
        assert_eq!(cert.len(), 7);
        assert!(cert.verified);
        // exhaustive pairwise oracle
        for &a in &cert.points {
            for &b in &cert.points {
                assert!(a == b || me.dist(a, b) >= 0.5);
            }
        }
        let single = separated_set_p9a(&me, &p, 1.5).unwrap();
        assert_eq!(single.points, vec![NodeId::ROOT]);
    }

    #[test]
    fn p9a_size_exceeds_integral() {
        let t = Tree::biased(1, 60).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(2.5), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let p = DecayProfile::polynomial(2.5, 1.0).unwrap();
        let rho = Rho::Polynomial { lambda: 1.0, scale: 1.0 };
        for k in 1..=10 {
            let eps = 0.6 * 0.8f64.powi(k);
            let cert = separated_set_p9a(&me, &p, eps).unwrap();
            assert!(cert.verified);
            assert!(cert.len() as f64 >= p9a_bound(&rho, &p, 2.0, eps), "eps {eps}");
        }
    }

    #[test]
    fn p9c_path_has_one_node_per_level() {
        let t = Tree::path(200).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(3.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let p = DecayProfile::polynomial(3.0, 1.0).unwrap();
        let (lv, cert) = separated_set_p9c(&me, &p, 0.01).unwrap();
        assert!(lv.m >= 2 && lv.gaps_ok);
        assert_eq!(cert.len() as u64, lv.m - 1);
        assert!(cert.verified);
    }

    #[test]
    fn p9c_binary() {
        let t = Tree::binary(20).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(3.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let p = DecayProfile::polynomial(3.0, 1.0).unwrap();
        let (lv, cert) = separated_set_p9c(&me, &p, 0.45).unwrap();
        assert_eq!(lv.n_points, 0);
        assert!(cert.is_empty() && cert.verified);
        let (lv, cert) = separated_set_p9c(&me, &p, 0.022).unwrap();
        assert_eq!(lv.v, vec![19, 14]);
        assert_eq!(cert.len() as u64, lv.sizes.iter().sum::<u64>());
        assert_eq!(cert.len(), 1 << 14);
        assert!(cert.verified);
    }

    #[test]
    fn counterexample_breaks_distbar() {
        let t = Tree::path(30).unwrap();
        let w = counterexample_weights(&t, 2.0, 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let p = DecayProfile::polynomial(2.0, 1.0).unwrap();
        assert!(distbar_violation(&me, &p).unwrap().is_some());
        assert!(matches!(separated_set_p9c(&me, &p, 0.05), Err(Error::Hypothesis { .. })));
        let w1 = WeightSystem::assign(&t, &WeightLaw::polynomial(2.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me1 = MetricEvaluator::new(&t, &w1).unwrap();
        assert_eq!(distbar_violation(&me1, &p).unwrap(), None);
    }
}
