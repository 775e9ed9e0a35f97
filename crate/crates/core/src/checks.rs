//! Cross-module invariants run on random small instances.

use crate::covering::{min_ball_cover, min_order_net, separated_to_intervals, verify_intervals, CoverMode};
use crate::error::Result;
use crate::metric::MetricEvaluator;
use crate::operator::{build_inscription, cover_dw, entropy_bruteforce, EntropyOptions, OperatorBundle, SparseVec};
use crate::tree::{NodeId, Tree};
use crate::weights::WeightSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Relative slack for floating-point comparisons.
pub const REL_TOL: f64 = 1e-12;

/// Random tree with `n` nodes plus random `alpha` and non-increasing `sigma`.
pub fn random_instance(rng: &mut impl Rng, n: usize, q: f64) -> Result<(Tree, WeightSystem<f64>)> {
    let edges: String = (1..n).map(|c| format!("{c} {}\n", rng.random_range(0..c))).collect();
    let tree = Tree::from_edge_list(&edges)?;
    let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    let mut sigma = vec![1.0; n];
    for i in 1..n {
        let p = tree.parent(NodeId(i as u32)).unwrap().index();
        sigma[i] = sigma[p] * rng.random_range(0.3..=1.0);
    }
    let ws = WeightSystem::from_tables(&tree, alpha, sigma, q)?;
    Ok((tree, ws))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    /// Individual comparisons made.
    pub cases: u64,
    pub violations: u64,
    /// Largest relative excess seen, where applicable.
    pub worst: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult { name: name.into(), instances: 0, cases: 0, violations: 0, worst: 0.0, passed: true }
    }

    fn record(&mut self, ok: bool) {
        self.cases += 1;
        if !ok {
            self.violations += 1;
            self.passed = false;
        }
    }

    /// Records `lhs <= rhs` up to [`REL_TOL`].
    fn le(&mut self, lhs: f64, rhs: f64) {
        let excess = (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE);
        self.worst = self.worst.max(excess);
        self.record(lhs <= rhs + REL_TOL * rhs.abs());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub seed: u64,
    pub instances: usize,
    pub max_nodes: usize,
    pub probes: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { seed: 0, instances: 50, max_nodes: 40, probes: 200 }
    }
}

const QS: [f64; 3] = [1.5, 2.0, 3.0];

fn pick_q(rng: &mut impl Rng) -> f64 {
    QS[rng.random_range(0..QS.len())]
}

/// Six geometric radii between the diameter and a fraction of the smallest
/// nonzero distance.
fn eps_grid(me: &MetricEvaluator<f64>) -> Vec<f64> {
    let d = me.matrix();
    let hi = d.iter().copied().fold(0.0, f64::max);
    let lo = d.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return vec![1.0];
    }
    let (top, ratio) = (hi * 1.01, (lo * 0.9 / (hi * 1.01)).powf(0.2));
    (0..6).map(|k| top * ratio.powi(k)).collect()
}

pub fn run_operator_checks(opts: &CheckOptions) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut axioms = CheckResult::new("metric_axioms");
    let mut mono = CheckResult::new("metric_monotone");
    let mut sandwich = CheckResult::new("order_vs_ball_cover");
    let mut factor = CheckResult::new("dyadic_factorization");
    let mut dw = CheckResult::new("dw_cover");
    let mut insc = CheckResult::new("inscription");
    let mut e1 = CheckResult::new("entropy_e1");
    for _ in 0..opts.instances {
        let n = rng.random_range(1..=opts.max_nodes.max(1));
        let q = pick_q(&mut rng);
        let (tree, ws) = random_instance(&mut rng, n, q)?;
        let me = MetricEvaluator::new(&tree, &ws)?;
        metric_checks(&me, &mut axioms, &mut mono);
        let grid = eps_grid(&me);
        cover_checks(&me, &grid, &mut sandwich)?;
        let ob = OperatorBundle::new(&me);
        let fact = ob.factorize();
        factor.instances += 1;
        factor.le(fact.residual(&ob), REL_TOL);
        factor.le(fact.z_norm(), 2.0);
        let hat = fact.dyadic_weights(&ws)?;
        let me_hat = MetricEvaluator::new(&tree, &hat)?;
        dw.instances += 1;
        for &eps in &grid {
            let c = cover_dw(&fact, eps)?;
            if c.exact {
                let order = min_order_net(&me_hat, eps)?.len();
                dw.le(c.count as f64, order as f64 + 1.0);
            }
        }
        inscription_checks(&ob, &grid, opts.probes, &mut rng, &mut insc)?;
        if n <= crate::operator::ENTROPY_MAX_NODES {
            e1.instances += 1;
            let br = entropy_bruteforce(&ob, 1, &EntropyOptions::default())?;
            let max_col = (0..n).map(|i| ob.column(NodeId(i as u32)).norm(q)).fold(0.0, f64::max);
            e1.record(br.lower == max_col && br.upper == max_col);
        }
    }
    let checks = vec![axioms, mono, sandwich, factor, dw, insc, e1];
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(CheckReport { seed: opts.seed, checks, all_passed })
}

fn metric_checks(me: &MetricEvaluator<f64>, axioms: &mut CheckResult, mono: &mut CheckResult) {
    let tree = me.tree();
    let n = tree.len();
    let d = me.matrix();
    axioms.instances += 1;
    mono.instances += 1;
    for i in 0..n {
        for j in 0..n {
            let dij = d[i * n + j];
            axioms.record(dij == d[j * n + i] && ((dij == 0.0) == (i == j)));
            for k in 0..n {
                axioms.le(dij, d[i * n + k] + d[k * n + j]);
            }
        }
    }
    // widening a comparable pair at either end cannot shrink the distance
    for s in 0..n {
        let sid = NodeId(s as u32);
        for t in tree.ancestors(sid) {
            let base = d[t.index() * n + s];
            if let Some(tp) = tree.parent(t) {
                mono.le(base, d[tp.index() * n + s]);
            }
            for c in tree.children(sid) {
                mono.le(base, d[t.index() * n + c.index()]);
            }
        }
    }
}

fn cover_checks(me: &MetricEvaluator<f64>, grid: &[f64], res: &mut CheckResult) -> Result<()> {
    res.instances += 1;
    for &eps in grid {
        let ball = min_ball_cover(me, eps, CoverMode::Exact)?.len() as f64;
        let order = min_order_net(me, eps)?.len() as f64;
        let order2 = min_order_net(me, 2.0 * eps)?.len() as f64;
        res.le(ball, order);
        res.le(order2, ball);
    }
    Ok(())
}

fn inscription_checks(
    ob: &OperatorBundle<f64>,
    grid: &[f64],
    probes: usize,
    rng: &mut impl Rng,
    res: &mut CheckResult,
) -> Result<()> {
    let me = ob.metric();
    let n = ob.tree().len();
    let q = ob.weights().q();
    res.instances += 1;
    for &eps in grid {
        let fam = separated_to_intervals(me, eps)?;
        res.record(verify_intervals(me, &fam).ok);
        if fam.intervals.is_empty() {
            continue;
        }
        let ins = build_inscription(ob, &fam)?;
        res.record(ins.reconstruction_is_identity());
        res.record(ins.diagonal().iter().all(|&x| x >= eps));
        for _ in 0..probes {
            let z = SparseVec::from_pairs((0..n).map(|i| (NodeId(i as u32), rng.random_range(-1.0..1.0))));
            let pz: f64 = ins.project(&z).iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q);
            res.le(pz, z.norm(q));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let r = run_operator_checks(&CheckOptions { instances: 8, max_nodes: 14, probes: 20, seed: 5 }).unwrap();
        assert!(r.all_passed, "{r:?}");
        assert!(r.checks.iter().all(|c| c.cases > 0), "{r:?}");
    }

    #[test]
    fn random_instance_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (t, w) = random_instance(&mut rng, 30, 2.0).unwrap();
        assert_eq!(t.len(), 30);
        for i in 1..30 {
            let c = NodeId(i);
            assert!(w.sigma(c) <= w.sigma(t.parent(c).unwrap()));
        }
    }
}
