use crate::scalar::Scalar;
use crate::tree::NodeId;
use std::collections::BTreeMap;

/// Sparse vector over tree nodes, sorted by node index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec<F> {
    entries: Vec<(NodeId, F)>,
}

impl<F: Scalar> SparseVec<F> {
    /// Sums duplicate indices; exact zeros are kept.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, F)>) -> Self {
        let mut map: BTreeMap<NodeId, F> = BTreeMap::new();
        for (i, v) in pairs {
            let e = map.entry(i).or_insert_with(F::zero);
            *e = *e + v;
        }
        SparseVec { entries: map.into_iter().collect() }
    }

    pub fn unit(t: NodeId) -> Self {
        SparseVec { entries: vec![(t, F::one())] }
    }

    pub fn entries(&self) -> &[(NodeId, F)] {
        &self.entries
    }

    pub fn get(&self, t: NodeId) -> F {
        self.entries
            .binary_search_by_key(&t, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or_else(|_| F::zero())
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn scaled(&self, c: F) -> Self {
        SparseVec { entries: self.entries.iter().map(|&(i, v)| (i, v * c)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_pairs(self.entries.iter().chain(&other.entries).copied())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-F::one()))
    }

    /// `l_q` norm; `q = inf` gives the sup norm.
    pub fn norm(&self, q: F) -> F {
        if q.is_infinite() {
            return self.entries.iter().map(|e| e.1.abs()).fold(F::zero(), F::max);
        }
        let s: F = self.entries.iter().map(|e| e.1.abs().pow_q(q)).sum();
        s.root_q(q)
    }

    /// Inner product; only common indices contribute.
    pub fn dot(&self, other: &Self) -> F {
        let (mut i, mut j) = (0, 0);
        let mut acc = F::zero();
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i].0, other.entries[j].0);
            if a == b {
                acc = acc + self.entries[i].1 * other.entries[j].1;
                i += 1;
                j += 1;
            } else if a < b {
                i += 1;
            } else {
                j += 1;
            }
        }
        acc
    }
}
