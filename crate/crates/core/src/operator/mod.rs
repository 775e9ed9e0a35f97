//! The weighted summation operator `V` and its dyadic factorization.
//!
//! `(V x)(t) = alpha(t) sum_{s >= t} sigma(s) x(s)`, so the column `V delta_t`
//! is `sigma(t) sum_{r <= t} alpha(r) delta_r`, supported on the root path of `t`.

mod entropy;
mod inscription;
mod sparse;

pub use entropy::{entropy_bruteforce, schuett_shape, EntropyBracket, EntropyOptions, MAX_INDEX as ENTROPY_MAX_INDEX, MAX_NODES as ENTROPY_MAX_NODES};
pub use inscription::{build_inscription, Inscription};
pub use sparse::SparseVec;

use crate::covering::{solve_min_cover, CoverMode, EXACT_CANDIDATE_LIMIT};
use crate::error::Result;
use crate::metric::MetricEvaluator;
use crate::scalar::Scalar;
use crate::tree::{NodeId, Tree};
use crate::weights::{dyadic_round, WeightSystem};
use fixedbitset::FixedBitSet;

/// `V` on a materialized tree.
#[derive(Clone, Debug)]
pub struct OperatorBundle<'a, F> {
    me: &'a MetricEvaluator<'a, F>,
}

impl<'a, F: Scalar> OperatorBundle<'a, F> {
    pub fn new(me: &'a MetricEvaluator<'a, F>) -> Self {
        OperatorBundle { me }
    }

    pub fn metric(&self) -> &'a MetricEvaluator<'a, F> {
        self.me
    }

    pub fn tree(&self) -> &'a Tree {
        self.me.tree()
    }

    pub fn weights(&self) -> &'a WeightSystem<F> {
        self.me.weights()
    }

    pub fn column(&self, t: NodeId) -> SparseVec<F> {
        let ws = self.weights();
        let st = ws.sigma(t);
        SparseVec::from_pairs(self.tree().path_up(t).map(|r| (r, ws.alpha(r) * st)))
    }

    pub fn apply(&self, x: &SparseVec<F>) -> SparseVec<F> {
        let ws = self.weights();
        SparseVec::from_pairs(x.entries().iter().flat_map(|&(s, xs)| {
            let c = ws.sigma(s) * xs;
            self.tree().path_up(s).map(move |r| (r, ws.alpha(r) * c))
        }))
    }

    /// Norm as a map `l_1 -> l_q`, i.e. the largest column norm
    /// `sigma(t) A(t)^(1/q)`.
    pub fn norm(&self) -> F {
        let ws = self.weights();
        let q = ws.q();
        (0..self.tree().len())
            .map(|i| self.me.prefixes()[i].root_q(q) * ws.sigmas()[i])
            .fold(F::zero(), F::max)
    }

    pub fn factorize(&self) -> DyadicFactorization<F> {
        let ws = self.weights();
        let rounding = dyadic_round(ws);
        let scale = ws.sigma_root_scale();
        let sigma_hat: Vec<F> = rounding.sigma_hat.iter().map(|&h| h * scale).collect();
        let delta = ws.sigmas().iter().zip(&sigma_hat).map(|(&s, &h)| s / h).collect();
        DyadicFactorization {
            tree: self.tree().clone(),
            alpha: ws.alphas().to_vec(),
            q: ws.q(),
            level_of: rounding.level_of,
            sigma_hat,
            delta,
        }
    }
}

/// One maximal run `[lambda_k(t), theta_k(t)]` of the root path of `t` inside `I_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelRun {
    pub k: u32,
    pub lambda: NodeId,
    pub theta: NodeId,
}

/// `V = W o Z o Delta` with dyadic `sigma_hat`.
#[derive(Clone, Debug)]
pub struct DyadicFactorization<F> {
    tree: Tree,
    alpha: Vec<F>,
    q: F,
    /// `m(t)`, the index of the dyadic bin `I_m` containing `t`.
    pub level_of: Vec<u32>,
    /// `sigma_hat` including the root scale.
    pub sigma_hat: Vec<F>,
    /// Diagonal of `Delta`, `sigma / sigma_hat`.
    pub delta: Vec<F>,
}

impl<F: Scalar> DyadicFactorization<F> {
    /// Runs of the root path of `t`, ordered from the root.
    pub fn runs(&self, t: NodeId) -> Vec<LevelRun> {
        let mut runs: Vec<LevelRun> = Vec::new();
        for r in self.tree.path_up(t) {
            let k = self.level_of[r.index()];
            match runs.last_mut() {
                Some(run) if run.k == k => run.lambda = r,
                _ => runs.push(LevelRun { k, lambda: r, theta: r }),
            }
        }
        runs.reverse();
        runs
    }

    /// `W delta_t = sigma_hat(t) sum_{r in [lambda_m(t), t]} alpha(r) delta_r`.
    pub fn w_column(&self, t: NodeId) -> SparseVec<F> {
        let m = self.level_of[t.index()];
        let h = self.sigma_hat[t.index()];
        SparseVec::from_pairs(
            self.tree
                .path_up(t)
                .take_while(|r| self.level_of[r.index()] == m)
                .map(|r| (r, self.alpha[r.index()] * h)),
        )
    }

    /// `Z delta_t = sum_{k in K_t} 2^(k-m) delta_{theta_k(t)}`.
    pub fn z_column(&self, t: NodeId) -> SparseVec<F> {
        let m = self.level_of[t.index()] as i32;
        let two = F::lit(2.0);
        SparseVec::from_pairs(self.runs(t).into_iter().map(|run| (run.theta, two.powi(run.k as i32 - m))))
    }

    pub fn apply_w(&self, x: &SparseVec<F>) -> SparseVec<F> {
        let parts: Vec<(NodeId, F)> = x
            .entries()
            .iter()
            .flat_map(|&(s, xs)| self.w_column(s).scaled(xs).entries().to_vec())
            .collect();
        SparseVec::from_pairs(parts)
    }

    pub fn apply_z(&self, x: &SparseVec<F>) -> SparseVec<F> {
        let parts: Vec<(NodeId, F)> = x
            .entries()
            .iter()
            .flat_map(|&(s, xs)| self.z_column(s).scaled(xs).entries().to_vec())
            .collect();
        SparseVec::from_pairs(parts)
    }

    pub fn apply_delta(&self, x: &SparseVec<F>) -> SparseVec<F> {
        SparseVec::from_pairs(x.entries().iter().map(|&(s, v)| (s, v * self.delta[s.index()])))
    }

    /// `W(Z(Delta delta_t))`.
    pub fn composed_column(&self, t: NodeId) -> SparseVec<F> {
        self.apply_w(&self.apply_z(&self.apply_delta(&SparseVec::unit(t))))
    }

    /// `max_t ||Z delta_t||_1`.
    pub fn z_norm(&self) -> F {
        (0..self.tree.len())
            .map(|i| self.z_column(NodeId(i as u32)).norm(F::one()))
            .fold(F::zero(), F::max)
    }

    /// Largest relative column residual `||V delta_t - W Z Delta delta_t||_q / ||V delta_t||_q`.
    pub fn residual(&self, ob: &OperatorBundle<F>) -> F {
        (0..self.tree.len())
            .map(|i| {
                let t = NodeId(i as u32);
                let col = ob.column(t);
                col.sub(&self.composed_column(t)).norm(self.q) / col.norm(self.q)
            })
            .fold(F::zero(), F::max)
    }

    /// Weights with sigma replaced by `sigma_hat`.
    pub fn dyadic_weights(&self, ws: &WeightSystem<F>) -> Result<WeightSystem<F>> {
        ws.with_sigma(&self.tree, self.sigma_hat.clone())
    }

    /// Distinct points `W delta_t` of `D_W`.
    pub fn dw_points(&self) -> Vec<SparseVec<F>> {
        let mut pts: Vec<SparseVec<F>> = Vec::new();
        for i in 0..self.tree.len() {
            let c = self.w_column(NodeId(i as u32));
            if !pts.contains(&c) {
                pts.push(c);
            }
        }
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DwCover {
    pub count: usize,
    pub exact: bool,
}

/// Covering number of `D_W` in `l_q` with centers drawn from `D_W` and the origin.
pub fn cover_dw<F: Scalar>(fact: &DyadicFactorization<F>, eps: F) -> Result<DwCover> {
    crate::covering::check_eps(eps)?;
    let pts = fact.dw_points();
    let n = pts.len();
    let mut candidates = pts.clone();
    candidates.push(SparseVec::default());
    let sets: Vec<FixedBitSet> = candidates
        .iter()
        .map(|c| {
            let mut s = FixedBitSet::with_capacity(n);
            for (j, p) in pts.iter().enumerate() {
                if p.sub(c).norm(fact.q) < eps {
                    s.insert(j);
                }
            }
            s
        })
        .collect();
    let exact = candidates.len() <= EXACT_CANDIDATE_LIMIT;
    let mode = if exact { CoverMode::Exact } else { CoverMode::Greedy };
    let sol = solve_min_cover(&sets, n, mode)?;
    Ok(DwCover { count: sol.chosen.len(), exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightLaw;

    fn v(pairs: &[(u32, f64)]) -> SparseVec<f64> {
        SparseVec::from_pairs(pairs.iter().map(|&(i, x)| (NodeId(i), x)))
    }

    #[test]
    fn columns_and_norms() {
        let p = Tree::path(3).unwrap();
        let w = WeightSystem::assign(&p, &WeightLaw::constant(1.0), &WeightLaw::constant(1.0), 1.0).unwrap();
        let me = MetricEvaluator::new(&p, &w).unwrap();
        let ob = OperatorBundle::new(&me);
        assert_eq!(ob.apply(&SparseVec::unit(NodeId(2))), v(&[(0, 1.0), (1, 1.0), (2, 1.0)]));
        assert_eq!(ob.apply(&SparseVec::unit(NodeId(0))), v(&[(0, 1.0)]));
        assert_eq!(ob.norm(), 3.0);
        let x = v(&[(1, 2.0), (2, -1.0)]);
        let y = v(&[(0, 0.5), (2, 3.0)]);
        assert_eq!(ob.apply(&x.add(&y)), ob.apply(&x).add(&ob.apply(&y)));
        let r = Tree::path(1).unwrap();
        let wr = WeightSystem::from_tables(&r, vec![0.3], vec![0.7], 2.0).unwrap();
        let mr = MetricEvaluator::new(&r, &wr).unwrap();
        assert_eq!(OperatorBundle::new(&mr).norm(), 0.3 * 0.7);
    }

    #[test]
    fn factorization_by_hand() {
        let p = Tree::path(3).unwrap();
        let w = WeightSystem::from_tables(&p, vec![1.0; 3], vec![1.0, 0.5, 0.5], 2.0).unwrap();
        let me = MetricEvaluator::new(&p, &w).unwrap();
        let ob = OperatorBundle::new(&me);
        let f = ob.factorize();
        let t2 = NodeId(2);
        assert_eq!(f.z_column(t2), v(&[(0, 0.5), (2, 1.0)]));
        assert_eq!(f.w_column(t2), v(&[(1, 0.5), (2, 0.5)]));
        assert_eq!(f.apply_w(&f.z_column(t2)), v(&[(0, 0.5), (1, 0.5), (2, 0.5)]));
        assert_eq!(f.residual(&ob), 0.0);
        assert!(f.z_norm() <= 2.0);
    }

    #[test]
    fn constant_sigma_factorization_is_trivial() {
        let b = Tree::binary(3).unwrap();
        let w = WeightSystem::assign(&b, &WeightLaw::polynomial(2.0), &WeightLaw::constant(3.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&b, &w).unwrap();
        let ob = OperatorBundle::new(&me);
        let f = ob.factorize();
        for i in 0..b.len() {
            let t = NodeId(i as u32);
            assert_eq!(f.z_column(t), SparseVec::unit(t));
            assert_eq!(f.delta[i], 1.0);
            assert_eq!(f.w_column(t), ob.column(t));
        }
    }

    #[test]
    fn dw_cover_examples() {
        let p = Tree::path(3).unwrap();
        let w = WeightSystem::assign(&p, &WeightLaw::constant(1.0), &WeightLaw::constant(1.0), 1.0).unwrap();
        let me = MetricEvaluator::new(&p, &w).unwrap();
        let f = OperatorBundle::new(&me).factorize();
        assert_eq!(cover_dw(&f, 1.5).unwrap(), DwCover { count: 1, exact: true });
        assert_eq!(cover_dw(&f, 3.5).unwrap().count, 1);
        assert_eq!(cover_dw(&f, 0.5).unwrap().count, 3);
    }
}
