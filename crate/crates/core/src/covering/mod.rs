//! Covering numbers, order nets, separated sets and their certificates.

mod order;
mod setcover;

pub use order::{greedy_order_net, low_depths, min_order_net};
pub use setcover::{solve_min_cover, CoverMode, SetCoverSolution, EXACT_CANDIDATE_LIMIT};

use crate::error::{Error, Result};
use crate::metric::MetricEvaluator;
use crate::scalar::Scalar;
use crate::tree::NodeId;
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverKind {
    Ball,
    Order,
}

/// Which explicit construction produced a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    LevelNet,
    Biased,
    P9a,
    P9c,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate<F> {
    pub kind: CoverKind,
    pub epsilon: F,
    pub centers: Vec<NodeId>,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
}

impl<F: Scalar + Serialize> CoverCertificate<F> {
    /// Builds a certificate and records whether it verifies.
    pub fn checked(me: &MetricEvaluator<F>, kind: CoverKind, epsilon: F, mut centers: Vec<NodeId>) -> Self {
        centers.sort_unstable();
        centers.dedup();
        let mut cert = CoverCertificate { kind, epsilon, centers, verified: false, construction: None };
        cert.verified = verify_cover(me, &cert).ok;
        cert
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingCertificate<F> {
    pub epsilon: F,
    pub points: Vec<NodeId>,
    /// Smallest distance between two points; `None` below two points.
    pub pairwise_min: Option<F>,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
}

impl<F: Scalar> PackingCertificate<F> {
    pub fn checked(me: &MetricEvaluator<F>, epsilon: F, mut points: Vec<NodeId>) -> Self {
        points.sort_unstable();
        points.dedup();
        let pairwise_min = min_pairwise_distance(me, &points, epsilon);
        let verified = pairwise_min.is_none_or(|m| m >= epsilon);
        PackingCertificate { epsilon, points, pairwise_min, verified, construction: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Pairs `(t_i, s_i)` with `t_i` a strict ancestor of `s_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalFamily<F> {
    pub intervals: Vec<(NodeId, NodeId)>,
    pub epsilon: F,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub ok: bool,
    pub violations: Vec<NodeId>,
}

impl Verification {
    fn from_violations(violations: Vec<NodeId>) -> Self {
        Verification { ok: violations.is_empty(), violations }
    }
}

/// Checks the certificate's defining property with strict `<`.
pub fn verify_cover<F: Scalar>(me: &MetricEvaluator<F>, cert: &CoverCertificate<F>) -> Verification {
    let tree = me.tree();
    let n = tree.len();
    if cert.centers.iter().any(|c| c.index() >= n) {
        return Verification { ok: false, violations: Vec::new() };
    }
    match cert.kind {
        CoverKind::Ball => {
            let mut covered = FixedBitSet::with_capacity(n);
            for &c in &cert.centers {
                me.for_each_in_ball(c, cert.epsilon, |r, _| covered.insert(r.index()));
            }
            Verification::from_violations(
                (0..n).filter(|&i| !covered.contains(i)).map(|i| NodeId(i as u32)).collect(),
            )
        }
        CoverKind::Order => {
            let uncovered = order_uncovered(me, &cert.centers, cert.epsilon);
            Verification::from_violations(uncovered)
        }
    }
}

/// Nodes with no center ancestor within distance `< eps`.
pub(crate) fn order_uncovered<F: Scalar>(me: &MetricEvaluator<F>, centers: &[NodeId], eps: F) -> Vec<NodeId> {
    let tree = me.tree();
    let n = tree.len();
    let mut is_center = FixedBitSet::with_capacity(n);
    centers.iter().for_each(|c| is_center.insert(c.index()));
    const NONE: u32 = u32::MAX;
    let mut nearest = vec![NONE; n];
    let mut dist = vec![F::zero(); n];
    let prefix = me.prefixes();
    let mut out = Vec::new();
    for i in 0..n {
        if is_center.contains(i) {
            nearest[i] = i as u32;
        } else if i > 0 {
            let p = tree.parent_raw(i) as usize;
            let c = nearest[p];
            if c != NONE {
                nearest[i] = c;
                dist[i] = dist[p].max(me.step(prefix[c as usize], i));
            }
        }
        if nearest[i] == NONE || !(dist[i] < eps) {
            out.push(NodeId(i as u32));
        }
    }
    out
}

/// Smallest pairwise distance, `None` for fewer than two points.
///
/// Small sets are scanned exhaustively; larger ones by exploring balls of
/// growing radius starting at `hint`.
pub fn min_pairwise_distance<F: Scalar>(me: &MetricEvaluator<F>, points: &[NodeId], hint: F) -> Option<F> {
    if points.len() < 2 {
        return None;
    }
    if points.len() <= 2048 {
        let mut best = F::infinity();
        for (i, &a) in points.iter().enumerate() {
            for &b in &points[i + 1..] {
                best = best.min(me.dist(a, b));
            }
        }
        return Some(best);
    }
    let mut member = FixedBitSet::with_capacity(me.tree().len());
    points.iter().for_each(|p| member.insert(p.index()));
    let diameter_bound = {
        let root = NodeId::ROOT;
        let far = (0..me.tree().len()).map(|i| me.dist(root, NodeId(i as u32))).fold(F::zero(), F::max);
        far + far
    };
    let mut radius = if hint > F::zero() { hint } else { diameter_bound / F::lit(1024.0) };
    loop {
        let mut best = F::infinity();
        for &p in points {
            me.for_each_in_ball(p, radius, |r, d| {
                if r != p && member.contains(r.index()) {
                    best = best.min(d);
                }
            });
        }
        if best.is_finite() {
            return Some(best);
        }
        if radius > diameter_bound {
            return Some(radius);
        }
        radius = radius + radius;
    }
}

/// `covered[s]` is the set of nodes that candidate `s` covers at `eps`.
pub fn coverage_sets<F: Scalar>(me: &MetricEvaluator<F>, eps: F, kind: CoverKind) -> Vec<FixedBitSet> {
    let tree = me.tree();
    let n = tree.len();
    (0..n)
        .map(|s| {
            let mut set = FixedBitSet::with_capacity(n);
            let s_id = NodeId(s as u32);
            match kind {
                CoverKind::Ball => me.for_each_in_ball(s_id, eps, |r, _| set.insert(r.index())),
                CoverKind::Order => for_each_in_order_ball(me, s_id, eps, |r| set.insert(r.index())),
            }
            set
        })
        .collect()
}

/// Calls `f` on every descendant `r` of `s` (including `s`) with `d(s, r) < eps`.
pub(crate) fn for_each_in_order_ball<F: Scalar>(me: &MetricEvaluator<F>, s: NodeId, eps: F, mut f: impl FnMut(NodeId)) {
    if !(F::zero() < eps) {
        return;
    }
    let tree = me.tree();
    let base = me.prefix(s);
    f(s);
    let mut stack: Vec<(u32, F)> = tree.children_raw(s.index()).iter().map(|&c| (c, F::zero())).collect();
    while let Some((u, up)) = stack.pop() {
        let du = up.max(me.step(base, u as usize));
        if du < eps {
            f(NodeId(u));
            stack.extend(tree.children_raw(u as usize).iter().map(|&c| (c, du)));
        }
    }
}

/// Minimum ball cover (exact up to [`EXACT_CANDIDATE_LIMIT`] nodes).
pub fn min_ball_cover<F: Scalar + Serialize>(me: &MetricEvaluator<F>, eps: F, mode: CoverMode) -> Result<CoverCertificate<F>> {
    min_cover_by_sets(me, eps, CoverKind::Ball, mode)
}

/// Set-cover based solver for either kind; the order kind is mostly
/// useful as an independent check on [`min_order_net`].
pub fn min_cover_by_sets<F: Scalar + Serialize>(
    me: &MetricEvaluator<F>,
    eps: F,
    kind: CoverKind,
    mode: CoverMode,
) -> Result<CoverCertificate<F>> {
    check_eps(eps)?;
    let n = me.tree().len();
    if mode == CoverMode::Exact && n > EXACT_CANDIDATE_LIMIT {
        return Err(Error::ExactLimit { limit: EXACT_CANDIDATE_LIMIT, got: n });
    }
    let sets = coverage_sets(me, eps, kind);
    let sol = solve_min_cover(&sets, n, mode)?;
    let centers = sol.chosen.into_iter().map(|i| NodeId(i as u32)).collect();
    Ok(CoverCertificate::checked(me, kind, eps, centers))
}

pub(crate) fn check_eps<F: Scalar>(eps: F) -> Result<()> {
    if eps > F::zero() && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon must be positive and finite, got {eps}")))
    }
}

/// Greedy maximal `eps`-separated set in breadth-first order.
pub fn maximal_separated_set<F: Scalar>(me: &MetricEvaluator<F>, eps: F) -> Result<PackingCertificate<F>> {
    check_eps(eps)?;
    let tree = me.tree();
    let mut blocked = FixedBitSet::with_capacity(tree.len());
    let mut points = Vec::new();
    for level in 0..=tree.height() {
        for x in tree.level(level) {
            if blocked.contains(x.index()) {
                continue;
            }
            points.push(x);
            me.for_each_in_ball(x, eps, |r, _| blocked.insert(r.index()));
        }
    }
    Ok(PackingCertificate::checked(me, eps, points))
}

/// Disjoint order intervals `(t_j, s_j]` with `d(t_j, s_j) >= eps`, one per
/// point of a maximal `2 eps`-separated set except possibly one near the root.
pub fn separated_to_intervals<F: Scalar>(me: &MetricEvaluator<F>, eps: F) -> Result<IntervalFamily<F>> {
    let packing = maximal_separated_set(me, eps + eps)?;
    let tree = me.tree();
    let root = NodeId::ROOT;
    let mut intervals = Vec::new();
    for &s in &packing.points {
        if me.dist(root, s) < eps {
            continue;
        }
        let mut t = tree.parent(s).expect("d(root, s) >= eps rules out the root");
        while me.dist_down(t, s) < eps {
            t = tree.parent(t).expect("d(root, s) >= eps bounds the walk");
        }
        intervals.push((t, s));
    }
    Ok(IntervalFamily { intervals, epsilon: eps })
}

/// Checks `d(t_i, s_i) >= eps` and pairwise disjointness of `(t_i, s_i]`.
pub fn verify_intervals<F: Scalar>(me: &MetricEvaluator<F>, family: &IntervalFamily<F>) -> Verification {
    let tree = me.tree();
    let mut used = FixedBitSet::with_capacity(tree.len());
    let mut bad = Vec::new();
    for &(t, s) in &family.intervals {
        if t == s || !tree.precedes(t, s) || !(me.dist_down(t, s) >= family.epsilon) {
            bad.push(s);
            continue;
        }
        let mut cur = s;
        while cur != t {
            if used.put(cur.index()) {
                bad.push(cur);
            }
            cur = tree.parent(cur).unwrap();
        }
    }
    Verification::from_violations(bad)
}

/// Order `2 eps`-net built from a verified ball `eps`-net.
pub fn order_net_from_cover<F: Scalar + Serialize>(
    me: &MetricEvaluator<F>,
    cert: &CoverCertificate<F>,
) -> Result<CoverCertificate<F>> {
    if cert.kind != CoverKind::Ball || !cert.verified || !verify_cover(me, cert).ok {
        return Err(Error::Unverified);
    }
    let tree = me.tree();
    let centers = cert
        .centers
        .iter()
        .map(|&s| {
            // the smallest meet over the ball is its shallowest ancestor inside it
            let mut m = s;
            while let Some(p) = tree.parent(m) {
                if me.dist_down(p, s) < cert.epsilon {
                    m = p;
                } else {
                    break;
                }
            }
            m
        })
        .collect();
    Ok(CoverCertificate::checked(me, CoverKind::Order, cert.epsilon + cert.epsilon, centers))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Count {
    Exact(u64),
    Bounds { lower: u64, upper: u64 },
}

impl Count {
    pub fn lower(&self) -> u64 {
        match *self {
            Count::Exact(v) => v,
            Count::Bounds { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> u64 {
        match *self {
            Count::Exact(v) => v,
            Count::Bounds { upper, .. } => upper,
        }
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            Count::Exact(v) => Some(v),
            Count::Bounds { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCounts {
    pub epsilon: f64,
    pub ball: Count,
    pub order: Count,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringProfile {
    pub eps_grid: Vec<f64>,
    pub counts: Vec<CoverCounts>,
}

#[derive(Clone, Copy, Debug)]
pub struct ProfileOptions {
    /// Exact ball covers are computed up to this many nodes.
    pub exact_limit: usize,
    /// Above this many nodes ball counts are bracketed by order counts alone,
    /// skipping the separated sets.
    pub packing_limit: usize,
}

pub const DEFAULT_PACKING_LIMIT: usize = 100_000;

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { exact_limit: EXACT_CANDIDATE_LIMIT, packing_limit: DEFAULT_PACKING_LIMIT }
    }
}

/// Ball and order covering numbers over a decreasing grid.
///
/// Order counts are always exact. Ball counts are exact on small trees and
/// otherwise bracketed by packings and order nets.
pub fn covering_profile<F: Scalar + Serialize>(
    me: &MetricEvaluator<F>,
    eps_grid: &[F],
    opts: ProfileOptions,
) -> Result<CoveringProfile> {
    if eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("epsilon grid must be strictly decreasing".into()));
    }
    let exact = me.tree().len() <= opts.exact_limit.min(EXACT_CANDIDATE_LIMIT);
    let mut counts = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let order = min_order_net(me, eps)?.len() as u64;
        let ball = if exact {
            Count::Exact(min_ball_cover(me, eps, CoverMode::Exact)?.len() as u64)
        } else {
            let order_at_double = min_order_net(me, eps + eps)?.len() as u64;
            let (lower, upper) = if me.tree().len() <= opts.packing_limit {
                let packing = maximal_separated_set(me, eps + eps)?.len() as u64;
                let net = maximal_separated_set(me, eps)?.len() as u64;
                (order_at_double.max(packing), order.min(net))
            } else {
                (order_at_double, order)
            };
            assert!(lower <= upper, "covering bounds crossed at eps = {eps}");
            if lower == upper {
                Count::Exact(lower)
            } else {
                Count::Bounds { lower, upper }
            }
        };
        if let Some(prev) = counts.last() {
            let prev: &CoverCounts = prev;
            assert!(prev.order.upper() <= order, "order covering numbers must not drop as eps shrinks");
            if let (Some(a), Some(b)) = (prev.ball.exact(), ball.exact()) {
                assert!(a <= b, "covering numbers must not drop as eps shrinks");
            }
        }
        counts.push(CoverCounts { epsilon: eps.to_f64_lossy(), ball, order: Count::Exact(order) });
    }
    Ok(CoveringProfile { eps_grid: eps_grid.iter().map(|e| e.to_f64_lossy()).collect(), counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Tree;
    use crate::weights::{WeightLaw, WeightSystem};

    fn unit_path3() -> (Tree, WeightSystem<f64>) {
        let t = Tree::path(3).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::constant(1.0), &WeightLaw::constant(1.0), 1.0).unwrap();
        (t, w)
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn path_coverage_sets() {
        let (t, w) = unit_path3();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let ball = coverage_sets(&me, 1.5, CoverKind::Ball);
        assert_eq!(ball[1].ones().collect::<Vec<_>>(), vec![0, 1, 2]);
        let order = coverage_sets(&me, 1.5, CoverKind::Order);
        assert_eq!(order[1].ones().collect::<Vec<_>>(), vec![1, 2]);
        let all = coverage_sets(&me, 10.0, CoverKind::Ball);
        assert!(all.iter().all(|s| s.count_ones(..) == 3));
    }

    #[test]
    fn path_cover_numbers() {
        let (t, w) = unit_path3();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        assert_eq!(min_ball_cover(&me, 1.5, CoverMode::Exact).unwrap().len(), 1);
        assert_eq!(min_ball_cover(&me, 1.0, CoverMode::Exact).unwrap().len(), 3);
        let o = min_order_net(&me, 1.5).unwrap();
        assert_eq!(o.len(), 2);
        assert!(o.verified);
        assert_eq!(min_order_net(&me, 1.0).unwrap().len(), 3);
        for eps in [1.5, 1.0] {
            let bb = min_cover_by_sets(&me, eps, CoverKind::Order, CoverMode::Exact).unwrap();
            assert_eq!(bb.len(), min_order_net(&me, eps).unwrap().len());
        }
    }

    #[test]
    fn single_node_counts() {
        let t = Tree::path(1).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::constant(1.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let prof = covering_profile(&me, &[2.0, 0.1, 1e-9], ProfileOptions::default()).unwrap();
        for c in &prof.counts {
            assert_eq!((c.ball.clone(), c.order.clone()), (Count::Exact(1), Count::Exact(1)));
        }
        assert!(separated_to_intervals(&me, 0.5).unwrap().intervals.is_empty());
    }

    #[test]
    fn profile_on_path() {
        let (t, w) = unit_path3();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let prof = covering_profile(&me, &[2.5, 1.5, 1.0, 0.5], ProfileOptions::default()).unwrap();
        let n: Vec<u64> = prof.counts.iter().map(|c| c.ball.exact().unwrap()).collect();
        assert_eq!(n, vec![1, 1, 3, 3]);
        assert!(covering_profile(&me, &[0.5, 1.0], ProfileOptions::default()).is_err());
    }

    #[test]
    fn bounds_mode_brackets() {
        let t = Tree::binary(6).unwrap();
        let w = WeightSystem::assign(&t, &WeightLaw::polynomial(3.0), &WeightLaw::constant(1.0), 2.0).unwrap();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let grid = [0.9, 0.6, 0.4, 0.25, 0.15];
        let prof = covering_profile(&me, &grid, ProfileOptions { exact_limit: 0, ..ProfileOptions::default() }).unwrap();
        let exact = covering_profile(&me, &grid, ProfileOptions::default()).unwrap();
        for (b, e) in prof.counts.iter().zip(&exact.counts) {
            assert!(b.ball.lower() <= b.ball.upper());
            let n = e.ball.exact().unwrap();
            assert!(b.ball.lower() <= n && n <= b.ball.upper());
        }
    }

    #[test]
    fn separated_sets_on_path() {
        let (t, w) = unit_path3();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        assert_eq!(maximal_separated_set(&me, 1.0).unwrap().points, ids(&[0, 1, 2]));
        assert_eq!(maximal_separated_set(&me, 100.0).unwrap().points, ids(&[0]));
        let fam = separated_to_intervals(&me, 0.5).unwrap();
        assert_eq!(fam.intervals, vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))]);
        assert!(verify_intervals(&me, &fam).ok);
    }

    #[test]
    fn order_net_from_ball_cover() {
        let (t, w) = unit_path3();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let ball = CoverCertificate::checked(&me, CoverKind::Ball, 1.5, ids(&[1]));
        assert!(ball.verified);
        let order = order_net_from_cover(&me, &ball).unwrap();
        assert_eq!(order.centers, ids(&[0]));
        assert_eq!(order.epsilon, 3.0);
        assert!(order.verified);
        let root_only = CoverCertificate::checked(&me, CoverKind::Ball, 5.0, ids(&[0]));
        assert_eq!(order_net_from_cover(&me, &root_only).unwrap().centers, ids(&[0]));
        let bad = CoverCertificate::checked(&me, CoverKind::Ball, 0.5, ids(&[1]));
        assert!(matches!(order_net_from_cover(&me, &bad), Err(Error::Unverified)));
    }

    #[test]
    fn verification_reports_violations() {
        let (t, w) = unit_path3();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let cert = CoverCertificate::checked(&me, CoverKind::Order, 5.0, ids(&[1]));
        let v = verify_cover(&me, &cert);
        assert_eq!(v.violations, ids(&[0]));
        let zero = CoverCertificate::checked(&me, CoverKind::Ball, 0.0, ids(&[0, 1]));
        assert!(!zero.verified);
        let ok = CoverCertificate::checked(&me, CoverKind::Order, 1.5, ids(&[0, 1]));
        assert_eq!(verify_cover(&me, &ok), Verification { ok: true, violations: vec![] });
    }

    #[test]
    fn certificate_json_round_trip() {
        let (t, w) = unit_path3();
        let me = MetricEvaluator::new(&t, &w).unwrap();
        let cert = min_order_net(&me, 1.5).unwrap();
        let json = cert.to_json().unwrap();
        let back: CoverCertificate<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["kind"], "order");
        assert_eq!(v["centers"], serde_json::json!([0, 1]));
        assert!(v.get("construction").is_none());
    }
}
