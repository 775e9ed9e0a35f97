//! Order nets on biased trees that keep only a few rightmost nodes per level.

use crate::covering::{check_eps, Construction, CoverCertificate, CoverKind};
use crate::error::{Error, Result};
use crate::metric::{DecayProfile, MetricEvaluator};
use crate::scalar::Scalar;
use crate::tree::{NodeId, TreeKind};
use serde::{Deserialize, Serialize};

pub const C_STAR_DEFAULT: f64 = 8.0;
pub const C_STAR_CAP: f64 = 1024.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasedNetSpec {
    pub lambda: u32,
    pub gamma: f64,
    pub q: f64,
    pub epsilon: f64,
    pub c_star: f64,
    /// `J`.
    pub j_max: usize,
    /// `n_1 >= ... >= n_J`.
    pub n: Vec<u64>,
    pub nu: Vec<u64>,
    /// Size of `S1`, all nodes above level `n_J`.
    pub s1_size: u64,
    pub size: u64,
    /// `size * eps^{q(lambda + 1)/gamma}`.
    pub size_ratio: f64,
    /// Levels `j` (1-based, `j < J`) where some node at level `n_j` has no
    /// ancestor in `S_{eps, j+1}`.
    pub lemma_failures: Vec<usize>,
    /// Values of `c*` tried, in order.
    pub attempts: Vec<f64>,
}

/// Builds the biased net at `eps` (certificate radius `2^{1/q} eps`).
///
/// With `c_star = None`, `c*` starts at [`C_STAR_DEFAULT`] and doubles until
/// the certificate verifies or [`C_STAR_CAP`] is exceeded; the last attempt
/// is returned either way.
pub fn biased_net<F: Scalar + Serialize>(
    me: &MetricEvaluator<F>,
    gamma: F,
    eps: F,
    c_star: Option<F>,
) -> Result<(BiasedNetSpec, CoverCertificate<F>)> {
    check_eps(eps)?;
    let tree = me.tree();
    let TreeKind::Biased { lambda } = *tree.kind() else {
        return Err(Error::InvalidParameter("biased net needs a biased tree".into()));
    };
    let ws = me.weights();
    let q = ws.q();
    for i in 0..tree.len() {
        let t = NodeId(i as u32);
        let want = F::of_usize(tree.depth(t).max(1) as usize).powf(-gamma / q);
        if ws.sigma(t) != F::one() || ((ws.alpha(t) - want).abs() > F::lit(1e-12) * want && tree.depth(t) > 0) {
            return Err(Error::Hypothesis { node: t, detail: "weights must be alpha = |t|^(-gamma/q), sigma = 1".into() });
        }
    }
    let profile = DecayProfile::polynomial(gamma, F::one())?;
    let epsq = eps.pow_q(q);
    let j_max = ((eps.to_f64_lossy()).powf(-q.to_f64_lossy() / gamma.to_f64_lossy()).floor() as usize).max(1);
    let n: Vec<u64> = (1..=j_max).map(|j| first_level_below(&profile, F::of_usize(j) * epsq)).collect();
    let n_last = *n.last().unwrap();
    let s1_size: u64 = (0..n_last).map(|l| tree.level_size(l as u32)).sum();
    let base = eps.to_f64_lossy().powf(-q.to_f64_lossy() * lambda as f64 / gamma.to_f64_lossy());
    let radius = F::lit(2.0).root_q(q) * eps;
    let mut c = c_star.map_or(C_STAR_DEFAULT, |c| c.to_f64_lossy());
    let mut attempts = Vec::new();
    loop {
        attempts.push(c);
        let cap = (c * base).ceil() as u64;
        let nu: Vec<u64> = n.iter().map(|&l| cap.min(level_size(tree, l))).collect();
        let mut centers: Vec<NodeId> = (0..n_last).flat_map(|l| tree.level(l as u32)).collect();
        for (&l, &k) in n.iter().zip(&nu) {
            centers.extend((0..k).filter_map(|r| tree.node_at_rank(l as u32, r)));
        }
        let mut cert = CoverCertificate::checked(me, CoverKind::Order, radius, centers);
        cert.construction = Some(Construction::Biased);
        let lemma_failures = (0..j_max.saturating_sub(1))
            .filter(|&j| {
                let r = level_size(tree, n[j]);
                r > 0 && (r - 1).checked_shr((n[j] - n[j + 1]).min(64) as u32).unwrap_or(0) >= nu[j + 1]
            })
            .map(|j| j + 1)
            .collect();
        let size = cert.len() as u64;
        let done = cert.verified || c_star.is_some() || c * 2.0 > C_STAR_CAP;
        if done {
            let spec = BiasedNetSpec {
                lambda,
                gamma: gamma.to_f64_lossy(),
                q: q.to_f64_lossy(),
                epsilon: eps.to_f64_lossy(),
                c_star: c,
                j_max,
                n: n.clone(),
                nu,
                s1_size,
                size,
                size_ratio: size as f64 / base / eps.to_f64_lossy().powf(-q.to_f64_lossy() / gamma.to_f64_lossy()),
                lemma_failures,
                attempts,
            };
            return Ok((spec, cert));
        }
        c *= 2.0;
    }
}

fn level_size(tree: &crate::tree::Tree, l: u64) -> u64 {
    if l > tree.height() as u64 { 0 } else { tree.level_size(l as u32) }
}

/// Smallest `n >= 1` with `Phi(n) <= y`.
fn first_level_below<F: Scalar>(profile: &DecayProfile<F>, y: F) -> u64 {
    let guess = profile.Phi_inv(y).ceil().to_f64_lossy().max(1.0) as u64;
    let ok = |n: u64| profile.Phi(F::of_usize(n as usize)) <= y;
    let mut n = guess;
    while n > 1 && ok(n - 1) {
        n -= 1;
    }
    while !ok(n) {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Tree;
    use crate::weights::{WeightLaw, WeightSystem};

    fn setup(lambda: u32, depth: u32, gamma: f64) -> (Tree, WeightSystem<f64>) {
        let t = Tree::biased(lambda, depth).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(gamma), &WeightLaw::constant(1.0), 2.0).unwrap();
        (t, w)
    }

    #[test]
    fn worked_arithmetic() {
        let (t, w) = setup(1, 30, 2.5);
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let (spec, cert) = biased_net(&me, 2.5, 0.3, Some(4.0)).unwrap();
        assert_eq!(spec.j_max, 2);
        assert_eq!(spec.n, vec![4, 3]);
        assert_eq!(spec.nu, vec![4, 3]);
        assert_eq!(spec.s1_size, 7);
        assert!(spec.size <= 14);
        assert_eq!(cert.construction, Some(Construction::Biased));
    }

    #[test]
    fn lemma_matches_tree_ancestry() {
        let (t, w) = setup(1, 200, 2.5);
        let me = MetricEvaluator::new(&t, &w).unwrap();
        for eps in [0.2, 0.1, 0.05] {
            let (spec, _) = biased_net(&me, 2.5, eps, Some(2.0)).unwrap();
            for j in 0..spec.j_max - 1 {
                let (lj, lk) = (spec.n[j] as u32, spec.n[j + 1] as u32);
                if lj > t.height() {
                    continue;
                }
                let fails = t.level(lj).any(|s| t.rank_from_right(t.ancestor_at(s, lk)).unwrap() >= spec.nu[j + 1]);
                assert_eq!(fails, spec.lemma_failures.contains(&(j + 1)), "eps {eps} j {}", j + 1);
            }
        }
    }

    #[test]
    fn auto_c_star_verifies_on_grid() {
        let (t, w) = setup(1, 400, 2.5);
        let me = MetricEvaluator::new(&t, &w).unwrap();
        for k in 1..=6 {
            let eps = 0.5f64.powi(k);
            let (spec, cert) = biased_net(&me, 2.5, eps, None).unwrap();
            assert!(cert.verified, "eps {eps}: {spec:?}");
        }
    }

    #[test]
    fn large_eps_is_mostly_s1() {
        let (t, w) = setup(1, 20, 2.5);
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let (spec, cert) = biased_net(&me, 2.5, 1.5, None).unwrap();
        assert_eq!(spec.j_max, 1);
        assert!(cert.verified);
    }
}
