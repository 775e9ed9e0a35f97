//! Embedding `Id: l_1^m -> l_q^m` into `V` along disjoint order intervals.

use super::{OperatorBundle, SparseVec};
use crate::covering::{verify_intervals, IntervalFamily};
use crate::error::{Error, Result};
use crate::scalar::{conjugate, Scalar};
use crate::tree::NodeId;

#[derive(Clone, Debug)]
pub struct Inscription<F> {
    pub epsilon: F,
    pub intervals: Vec<(NodeId, NodeId)>,
    /// Maximizer `v_i` of the metric on `(t_i, s_i]`.
    pub maximizers: Vec<NodeId>,
    /// `y_i = delta_{v_i} - sigma(v_i)/sigma(t_i) delta_{t_i}`.
    pub y: Vec<SparseVec<F>>,
    /// `z_i = V y_i`, supported on `(t_i, v_i]`.
    pub z: Vec<SparseVec<F>>,
    pub beta: Vec<F>,
    /// Unit vectors in `l_q'` dual to `z_i`.
    pub b: Vec<SparseVec<F>>,
    /// `matrix[i][j] = <z_j, b_i>`.
    pub matrix: Vec<Vec<F>>,
}

impl<F: Scalar> Inscription<F> {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn diagonal(&self) -> Vec<F> {
        (0..self.len()).map(|i| self.matrix[i][i]).collect()
    }

    /// `Delta o P o V o J` with `Delta = diag(1 / <z_i, b_i>)`.
    pub fn reconstruction(&self) -> Vec<Vec<F>> {
        self.matrix
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|&x| x / self.matrix[i][i]).collect())
            .collect()
    }

    pub fn reconstruction_is_identity(&self) -> bool {
        self.reconstruction()
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &x)| x == if i == j { F::one() } else { F::zero() }))
    }

    /// `P z = (<z, b_i>)_i`.
    pub fn project(&self, z: &SparseVec<F>) -> Vec<F> {
        self.b.iter().map(|b| z.dot(b)).collect()
    }
}

/// Builds the inscription from a verified interval family.
pub fn build_inscription<F: Scalar>(ob: &OperatorBundle<F>, family: &IntervalFamily<F>) -> Result<Inscription<F>> {
    let me = ob.metric();
    if !verify_intervals(me, family).ok {
        return Err(Error::Unverified);
    }
    let tree = ob.tree();
    let ws = ob.weights();
    let q = ws.q();
    let q_conj = conjugate(q);
    let mut ins = Inscription {
        epsilon: family.epsilon,
        intervals: family.intervals.clone(),
        maximizers: Vec::new(),
        y: Vec::new(),
        z: Vec::new(),
        beta: Vec::new(),
        b: Vec::new(),
        matrix: Vec::new(),
    };
    for &(t, s) in &family.intervals {
        let base = me.prefix(t);
        let v = tree
            .order_interval(t, s, true)?
            .into_iter()
            .max_by(|&a, &b| {
                me.step(base, a.index())
                    .partial_cmp(&me.step(base, b.index()))
                    .expect("finite distances")
            })
            .expect("t strictly precedes s");
        let sv = ws.sigma(v);
        let y = SparseVec::from_pairs([(v, F::one()), (t, -(sv / ws.sigma(t)))]);
        let seg = tree.order_interval(t, v, true)?;
        let z = SparseVec::from_pairs(seg.iter().map(|&r| (r, sv * ws.alpha(r))));
        let residual = ob.apply(&y).sub(&z).norm(q);
        if residual > F::lit(1e-12) * z.norm(q).max(F::one()) {
            return Err(Error::Verification(format!("V y differs from its closed form by {residual}")));
        }
        let mass: F = seg.iter().map(|&r| ws.alpha(r).pow_q(q)).sum();
        let beta = if q_conj.is_infinite() { F::one() } else { mass.powf(q_conj.recip()) };
        let b = SparseVec::from_pairs(seg.iter().map(|&r| (r, ws.alpha(r).powf(q - F::one()) / beta)));
        ins.maximizers.push(v);
        ins.y.push(y);
        ins.z.push(z);
        ins.beta.push(beta);
        ins.b.push(b);
    }
    ins.matrix = ins.b.iter().map(|b| ins.z.iter().map(|z| z.dot(b)).collect()).collect();
    Ok(ins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricEvaluator;
    use crate::tree::Tree;
    use crate::weights::{WeightLaw, WeightSystem};

    #[test]
    fn siblings_give_identity() {
        let b = Tree::binary(1).unwrap();
        let w = WeightSystem::assign(&b, &WeightLaw::constant(1.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&b, &w).unwrap();
        let ob = OperatorBundle::new(&me);
        let fam = IntervalFamily { intervals: vec![(NodeId(0), NodeId(1)), (NodeId(0), NodeId(2))], epsilon: 1.0 };
        let ins = build_inscription(&ob, &fam).unwrap();
        assert_eq!(ins.y[0], SparseVec::from_pairs([(NodeId(1), 1.0), (NodeId(0), -1.0)]));
        assert_eq!(ins.z[0], SparseVec::unit(NodeId(1)));
        assert_eq!(ins.b[1], SparseVec::unit(NodeId(2)));
        assert_eq!(ins.diagonal(), vec![1.0, 1.0]);
        assert!(ins.reconstruction_is_identity());
    }

    #[test]
    fn single_interval() {
        let p = Tree::path(2).unwrap();
        let w = WeightSystem::from_tables(&p, vec![1.0f64, 0.8], vec![1.0, 0.6], 2.0).unwrap();
        let me = MetricEvaluator::new(&p, &w).unwrap();
        let ob = OperatorBundle::new(&me);
        let d = me.dist(NodeId(0), NodeId(1));
        let fam = IntervalFamily { intervals: vec![(NodeId(0), NodeId(1))], epsilon: d };
        let ins = build_inscription(&ob, &fam).unwrap();
        assert!((ins.diagonal()[0] - d).abs() <= 1e-15f64);
        assert!(ins.reconstruction_is_identity());
        let bad = IntervalFamily { intervals: vec![(NodeId(0), NodeId(1))], epsilon: 2.0 };
        assert!(matches!(build_inscription(&ob, &bad), Err(Error::Unverified)));
    }
}
