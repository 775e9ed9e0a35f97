//! Order nets: an exact solver and the greedy heuristic.
//!
//! For a node `t`, the admissible centers `{s <= t : d(s, t) < eps}` form the
//! segment `[low(t), t]` of its root path, because `d` is monotone along
//! chains. A minimum order net is therefore a minimum set of nodes hitting
//! every vertical segment `[low(t), t]`, which a bottom-up sweep solves
//! exactly: a center is placed at `u` only when some unhit segment starts at
//! `u`, and moving any center of an optimal solution up to such a `u` keeps it
//! feasible.

use super::{check_eps, for_each_in_order_ball, CoverCertificate, CoverKind};
use crate::error::Result;
use crate::metric::MetricEvaluator;
use crate::scalar::Scalar;
use crate::tree::NodeId;
use fixedbitset::FixedBitSet;
use serde::Serialize;

/// Preorder of the whole tree.
fn preorder(tree: &crate::tree::Tree) -> Vec<u32> {
    let mut out = Vec::with_capacity(tree.len());
    let mut stack = vec![0u32];
    while let Some(u) = stack.pop() {
        out.push(u);
        stack.extend(tree.children_raw(u as usize).iter().rev());
    }
    out
}

/// Depth of the shallowest ancestor `s` of each node `t` with `d(s, t) < eps`.
pub fn low_depths<F: Scalar>(me: &MetricEvaluator<F>, eps: F) -> Result<Vec<u32>> {
    check_eps(eps)?;
    let tree = me.tree();
    let n = tree.len();
    let prefix = me.prefixes();
    let depth = tree.depths();
    let mut low = vec![0u32; n];
    // prefix sums of the current root path, by depth
    let mut path_prefix: Vec<F> = Vec::new();
    if me.weights().is_one_weight() {
        // d(anc, t) is attained at v = t, so a binary search over the path suffices
        for u in preorder(tree) {
            let i = u as usize;
            let k = depth[i] as usize;
            path_prefix.truncate(k);
            path_prefix.push(prefix[i]);
            if k == 0 {
                continue;
            }
            let mut lo = low[tree.parent_raw(i) as usize] as usize;
            let mut hi = k;
            while lo < hi {
                let mid = (lo + hi) / 2;
                if me.step(path_prefix[mid], i) < eps {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            low[i] = lo as u32;
        }
        return Ok(low);
    }
    // windows[k] holds d(anc_j, current node at depth k) for j >= start[k]
    let mut windows: Vec<Vec<F>> = Vec::new();
    let mut start: Vec<usize> = Vec::new();
    for u in preorder(tree) {
        let i = u as usize;
        let k = depth[i] as usize;
        path_prefix.truncate(k);
        path_prefix.push(prefix[i]);
        if windows.len() <= k {
            windows.push(Vec::new());
            start.push(0);
        }
        if k == 0 {
            windows[0].clear();
            windows[0].push(F::zero());
            start[0] = 0;
            continue;
        }
        let (head, tail) = windows.split_at_mut(k);
        let parent_win = &head[k - 1];
        let win = &mut tail[0];
        win.clear();
        let mut first = None;
        for (off, &dp) in parent_win.iter().enumerate() {
            let j = start[k - 1] + off;
            let d = dp.max(me.step(path_prefix[j], i));
            if first.is_none() {
                if d < eps {
                    first = Some(j);
                } else {
                    continue;
                }
            }
            win.push(d);
        }
        win.push(F::zero());
        start[k] = first.unwrap_or(k);
        low[i] = start[k] as u32;
    }
    Ok(low)
}

/// Minimum order `eps`-net, computed exactly.
pub fn min_order_net<F: Scalar + Serialize>(me: &MetricEvaluator<F>, eps: F) -> Result<CoverCertificate<F>> {
    let low = low_depths(me, eps)?;
    let tree = me.tree();
    let depth = tree.depths();
    const NONE: i64 = -1;
    // deepest top among unhit segments whose bottom lies in the subtree
    let mut pending: Vec<i64> = low.iter().map(|&l| l as i64).collect();
    let mut centers = Vec::new();
    for i in (0..tree.len()).rev() {
        let mut up = pending[i];
        if up == depth[i] as i64 {
            centers.push(NodeId(i as u32));
            up = NONE;
        }
        debug_assert!(up < depth[i] as i64);
        if i > 0 {
            let p = tree.parent_raw(i) as usize;
            pending[p] = pending[p].max(up);
        }
    }
    Ok(CoverCertificate::checked(me, CoverKind::Order, eps, centers))
}

/// Greedy order net: take the deepest uncovered node, then the admissible
/// ancestor covering most uncovered nodes (ties to the shallowest).
pub fn greedy_order_net<F: Scalar + Serialize>(me: &MetricEvaluator<F>, eps: F) -> Result<CoverCertificate<F>> {
    let low = low_depths(me, eps)?;
    let tree = me.tree();
    let mut covered = FixedBitSet::with_capacity(tree.len());
    let mut centers = Vec::new();
    for level in (0..=tree.height()).rev() {
        let nodes: Vec<NodeId> = tree.level(level).collect();
        for &x in nodes.iter().rev() {
            if covered.contains(x.index()) {
                continue;
            }
            let mut best = (0usize, x);
            let mut a = x;
            loop {
                let mut count = 0usize;
                for_each_in_order_ball(me, a, eps, |r| {
                    if !covered.contains(r.index()) {
                        count += 1;
                    }
                });
                if count >= best.0 {
                    best = (count, a);
                }
                if tree.depth(a) == low[x.index()] {
                    break;
                }
                a = tree.parent(a).unwrap();
            }
            for_each_in_order_ball(me, best.1, eps, |r| covered.insert(r.index()));
            centers.push(best.1);
        }
    }
    Ok(CoverCertificate::checked(me, CoverKind::Order, eps, centers))
}
