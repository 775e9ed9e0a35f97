//! Finite rooted trees with topological numbering.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Default cap on materialized nodes.
pub const DEFAULT_NODE_LIMIT: u64 = 1 << 24;

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeKind {
    Path,
    Binary,
    /// `R(n) = ceil(n^lambda)` for `n >= 1`.
    Moderate { lambda: f64 },
    Biased { lambda: u32 },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum GrowthLaw {
    Polynomial { lambda: f64 },
    Binary,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub counts: Vec<u64>,
    pub growth_law: GrowthLaw,
}

/// Immutable rooted tree. Parents always have smaller indices than children.
#[derive(Clone, Debug)]
pub struct Tree {
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    child_list: Vec<u32>,
    level_start: Vec<usize>,
    level_nodes: Vec<u32>,
    /// Levels are stored as contiguous index ranges ordered by rank from the right.
    planar: bool,
    kind: TreeKind,
}

impl Tree {
    fn from_parents(parent: Vec<u32>, kind: TreeKind, planar: bool) -> Tree {
        let n = parent.len();
        let mut depth = vec![0u32; n];
        let mut child_count = vec![0u32; n + 1];
        for i in 1..n {
            let p = parent[i] as usize;
            depth[i] = depth[p] + 1;
            child_count[p] += 1;
        }
        let mut child_start = vec![0u32; n + 1];
        for i in 0..n {
            child_start[i + 1] = child_start[i] + child_count[i];
        }
        let mut fill = child_start.clone();
        let mut child_list = vec![0u32; n.saturating_sub(1)];
        for i in 1..n {
            let p = parent[i] as usize;
            child_list[fill[p] as usize] = i as u32;
            fill[p] += 1;
        }
        let max_depth = depth.iter().copied().max().unwrap_or(0) as usize;
        let mut level_count = vec![0usize; max_depth + 2];
        for &d in &depth {
            level_count[d as usize + 1] += 1;
        }
        let mut level_start = vec![0usize; max_depth + 2];
        for d in 0..=max_depth {
            level_start[d + 1] = level_start[d] + level_count[d + 1];
        }
        let mut fill = level_start.clone();
        let mut level_nodes = vec![0u32; n];
        for i in 0..n {
            let d = depth[i] as usize;
            level_nodes[fill[d]] = i as u32;
            fill[d] += 1;
        }
        Tree { parent, depth, child_start, child_list, level_start, level_nodes, planar, kind }
    }

    /// Chain `0 -> 1 -> ... -> n_levels-1`.
    pub fn path(n_levels: usize) -> Result<Tree> {
        if n_levels == 0 {
            return Err(Error::InvalidParameter("path needs at least one level".into()));
        }
        check_limit(n_levels as u64, DEFAULT_NODE_LIMIT)?;
        let parent = (0..n_levels)
            .map(|i| if i == 0 { NO_PARENT } else { i as u32 - 1 })
            .collect();
        Ok(Tree::from_parents(parent, TreeKind::Path, true))
    }

    pub fn binary(depth: u32) -> Result<Tree> {
        Tree::binary_with_limit(depth, DEFAULT_NODE_LIMIT)
    }

    pub fn binary_with_limit(depth: u32, limit: u64) -> Result<Tree> {
        if depth >= 63 {
            return Err(Error::LimitExceeded { requested: u64::MAX, limit });
        }
        let counts: Vec<u64> = (0..=depth).map(|n| 1u64 << n).collect();
        Tree::from_right_counts(&counts, TreeKind::Binary, limit)
    }

    /// Keeps the `R(n)` rightmost nodes of each binary level, with
    /// `R(n) = 2^n` for `n <= 2 lambda` and `n^lambda` afterwards, never
    /// more than twice the previous level.
    pub fn biased(lambda: u32, depth: u32) -> Result<Tree> {
        Tree::biased_with_limit(lambda, depth, DEFAULT_NODE_LIMIT)
    }

    pub fn biased_with_limit(lambda: u32, depth: u32, limit: u64) -> Result<Tree> {
        if lambda == 0 {
            return Err(Error::InvalidParameter("biased tree needs lambda >= 1".into()));
        }
        if depth == 0 {
            return Err(Error::InvalidParameter("biased tree needs depth >= 1".into()));
        }
        let counts = biased_counts(lambda, depth);
        Tree::from_right_counts(&counts, TreeKind::Biased { lambda }, limit)
    }

    /// Moderate growth tree with `R(n) = ceil(n^lambda)`; each level's
    /// nodes are spread over the previous level as evenly as possible.
    pub fn moderate(lambda: f64, depth: u32) -> Result<Tree> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("moderate growth needs lambda > 0, got {lambda}")));
        }
        let mut counts = vec![1u64];
        let mut total: u64 = 1;
        for n in 1..=depth {
            let r = (n as f64).powf(lambda).ceil().max(1.0);
            let r = if r > 1e18 { u64::MAX / 4 } else { r as u64 };
            let prev = *counts.last().unwrap();
            counts.push(r.max(prev));
            total = total.saturating_add(*counts.last().unwrap());
            check_limit(total, DEFAULT_NODE_LIMIT)?;
        }
        let mut parent = vec![NO_PARENT];
        let mut prev_start = 0u32;
        for n in 1..counts.len() {
            let prev = counts[n - 1];
            let cur = counts[n];
            let start = parent.len() as u32;
            for k in 0..cur {
                // balanced assignment of children
                let p = (k * prev / cur) as u32;
                parent.push(prev_start + p);
            }
            prev_start = start;
        }
        Ok(Tree::from_parents(parent, TreeKind::Moderate { lambda }, false))
    }

    /// Builds a planar subtree of the binary tree from per-level counts of
    /// rightmost nodes. Requires `counts[n+1] <= 2 counts[n]`.
    fn from_right_counts(counts: &[u64], kind: TreeKind, limit: u64) -> Result<Tree> {
        let total = counts.iter().fold(0u64, |a, &c| a.saturating_add(c));
        check_limit(total, limit)?;
        let mut parent = Vec::with_capacity(total as usize);
        parent.push(NO_PARENT);
        let mut prev_start = 0u32;
        for n in 1..counts.len() {
            debug_assert!(counts[n] <= 2 * counts[n - 1]);
            let start = parent.len() as u32;
            for r in 0..counts[n] {
                parent.push(prev_start + (r / 2) as u32);
            }
            prev_start = start;
        }
        Ok(Tree::from_parents(parent, kind, true))
    }

    /// Parses `child parent` pairs; the root is index 0.
    pub fn from_edge_list(text: &str) -> Result<Tree> {
        let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or_else(|| Error::EdgeList { line: lineno + 1, reason: "expected two indices".into() })?
                    .parse::<usize>()
                    .map_err(|e| Error::EdgeList { line: lineno + 1, reason: e.to_string() })
            };
            let c = parse(it.next())?;
            let p = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::EdgeList { line: lineno + 1, reason: "trailing tokens".into() });
            }
            pairs.push((c, p, lineno + 1));
        }
        let n = pairs.len() + 1;
        check_limit(n as u64, DEFAULT_NODE_LIMIT)?;
        let mut parent = vec![NO_PARENT; n];
        for &(c, p, line) in &pairs {
            if c == 0 {
                return Err(Error::EdgeList { line, reason: "the root cannot have a parent".into() });
            }
            if c >= n {
                return Err(Error::EdgeList { line, reason: format!("child {c} leaves a gap in the numbering") });
            }
            if p >= c {
                return Err(Error::EdgeList { line, reason: format!("parent {p} is not numbered before child {c}") });
            }
            if parent[c] != NO_PARENT {
                return Err(Error::EdgeList { line, reason: format!("node {c} has two parents") });
            }
            parent[c] = p as u32;
        }
        if let Some(orphan) = (1..n).find(|&i| parent[i] == NO_PARENT) {
            return Err(Error::EdgeList { line: 0, reason: format!("node {orphan} has no parent") });
        }
        Ok(Tree::from_parents(parent, TreeKind::Custom, false))
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Tree> {
        Tree::from_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for i in 1..self.len() {
            out.push_str(&format!("{} {}\n", i, self.parent[i]));
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn kind(&self) -> &TreeKind {
        &self.kind
    }

    /// Largest depth present.
    pub fn height(&self) -> u32 {
        (self.level_start.len() - 2) as u32
    }

    #[inline]
    pub fn parent(&self, t: NodeId) -> Option<NodeId> {
        let p = self.parent[t.index()];
        (p != NO_PARENT).then_some(NodeId(p))
    }

    /// Raw parent index; `u32::MAX` for the root.
    #[inline]
    pub(crate) fn parent_raw(&self, i: usize) -> u32 {
        self.parent[i]
    }

    #[inline]
    pub fn depth(&self, t: NodeId) -> u32 {
        self.depth[t.index()]
    }

    pub(crate) fn depths(&self) -> &[u32] {
        &self.depth
    }

    #[inline]
    pub fn children(&self, t: NodeId) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        let i = t.index();
        self.child_list[self.child_start[i] as usize..self.child_start[i + 1] as usize]
            .iter()
            .map(|&c| NodeId(c))
    }

    #[inline]
    pub(crate) fn children_raw(&self, i: usize) -> &[u32] {
        &self.child_list[self.child_start[i] as usize..self.child_start[i + 1] as usize]
    }

    pub fn level(&self, n: u32) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        let n = n as usize;
        let (a, b) = if n + 1 < self.level_start.len() {
            (self.level_start[n], self.level_start[n + 1])
        } else {
            (0, 0)
        };
        self.level_nodes[a..b].iter().map(|&c| NodeId(c))
    }

    /// `R(n)`; zero beyond the height.
    pub fn level_size(&self, n: u32) -> u64 {
        let n = n as usize;
        if n + 1 < self.level_start.len() {
            (self.level_start[n + 1] - self.level_start[n]) as u64
        } else {
            0
        }
    }

    pub fn level_profile(&self) -> LevelProfile {
        let counts = (0..=self.height()).map(|n| self.level_size(n)).collect();
        let growth_law = match self.kind {
            TreeKind::Path => GrowthLaw::Polynomial { lambda: 0.0 },
            TreeKind::Binary => GrowthLaw::Binary,
            TreeKind::Moderate { lambda } => GrowthLaw::Polynomial { lambda },
            TreeKind::Biased { lambda } => GrowthLaw::Polynomial { lambda: lambda as f64 },
            TreeKind::Custom => GrowthLaw::Custom,
        };
        LevelProfile { counts, growth_law }
    }

    /// Position in the level counted from the right (0 = rightmost);
    /// only defined for path, binary and biased trees.
    pub fn rank_from_right(&self, t: NodeId) -> Option<u64> {
        self.planar
            .then(|| (t.index() - self.level_start[self.depth(t) as usize]) as u64)
    }

    /// Node at the given level and rank from the right.
    pub fn node_at_rank(&self, level: u32, rank: u64) -> Option<NodeId> {
        if !self.planar || rank >= self.level_size(level) {
            return None;
        }
        Some(NodeId((self.level_start[level as usize] as u64 + rank) as u32))
    }

    /// Binary string label of a node of a binary or biased tree.
    pub fn binary_label(&self, t: NodeId) -> Option<String> {
        if !matches!(self.kind, TreeKind::Binary | TreeKind::Biased { .. }) {
            return None;
        }
        let n = self.depth(t);
        let r = self.rank_from_right(t)?;
        let value = ((1u128 << n) - 1) as u64 - r;
        Some((0..n).rev().map(|b| if value >> b & 1 == 1 { '1' } else { '0' }).collect())
    }

    /// Inverse of [`Tree::binary_label`]; the empty string is the root.
    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        if !matches!(self.kind, TreeKind::Binary | TreeKind::Biased { .. }) || label.len() > 62 {
            return None;
        }
        let n = label.len() as u32;
        let mut value = 0u64;
        for ch in label.chars() {
            value = value * 2
                + match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return None,
                };
        }
        self.node_at_rank(n, (1u64 << n) - 1 - value)
    }

    /// `t` is an ancestor of `s` or equal to it.
    pub fn precedes(&self, t: NodeId, s: NodeId) -> bool {
        let dt = self.depth(t);
        let mut cur = s;
        if self.depth(cur) < dt {
            return false;
        }
        while self.depth(cur) > dt {
            cur = NodeId(self.parent[cur.index()]);
        }
        cur == t
    }

    pub fn is_comparable(&self, t: NodeId, s: NodeId) -> bool {
        self.precedes(t, s) || self.precedes(s, t)
    }

    pub fn meet(&self, t: NodeId, s: NodeId) -> NodeId {
        let (mut a, mut b) = (t.0, s.0);
        while self.depth[a as usize] > self.depth[b as usize] {
            a = self.parent[a as usize];
        }
        while self.depth[b as usize] > self.depth[a as usize] {
            b = self.parent[b as usize];
        }
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
        }
        NodeId(a)
    }

    /// `[t, s]` or `(t, s]` in root-to-leaf order.
    pub fn order_interval(&self, t: NodeId, s: NodeId, half_open: bool) -> Result<Vec<NodeId>> {
        if !self.precedes(t, s) {
            return Err(Error::NotComparable(t, s));
        }
        let mut out = Vec::with_capacity((self.depth(s) - self.depth(t) + 1) as usize);
        let mut cur = s;
        while cur != t {
            out.push(cur);
            cur = NodeId(self.parent[cur.index()]);
        }
        if !half_open {
            out.push(t);
        }
        out.reverse();
        Ok(out)
    }

    /// Ancestors of `t` from the root down to `t` itself.
    pub fn ancestors(&self, t: NodeId) -> std::vec::IntoIter<NodeId> {
        let mut v: Vec<NodeId> = self.path_up(t).collect();
        v.reverse();
        v.into_iter()
    }

    /// `t`, its parent, ..., the root.
    pub fn path_up(&self, t: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let mut cur = t.0;
        std::iter::from_fn(move || {
            if cur == NO_PARENT {
                return None;
            }
            let out = NodeId(cur);
            cur = self.parent[cur as usize];
            Some(out)
        })
    }

    /// Ancestor of `t` at depth `level <= depth(t)`.
    pub fn ancestor_at(&self, t: NodeId, level: u32) -> NodeId {
        let mut cur = t;
        while self.depth(cur) > level {
            cur = NodeId(self.parent[cur.index()]);
        }
        cur
    }

    /// Preorder traversal of the subtree rooted at `t`.
    pub fn subtree(&self, t: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![t.0];
        while let Some(u) = stack.pop() {
            out.push(NodeId(u));
            stack.extend(self.children_raw(u as usize).iter().rev());
        }
        out
    }
}

fn check_limit(requested: u64, limit: u64) -> Result<()> {
    if requested > limit {
        Err(Error::LimitExceeded { requested, limit })
    } else {
        Ok(())
    }
}

/// Level sizes of the biased tree up to `depth`.
pub fn biased_counts(lambda: u32, depth: u32) -> Vec<u64> {
    let mut counts = vec![1u64];
    for n in 1..=depth as u64 {
        let law = if n <= 2 * lambda as u64 {
            1u64 << n
        } else {
            n.checked_pow(lambda).unwrap_or(u64::MAX)
        };
        let prev = *counts.last().unwrap();
        counts.push(law.min(prev.saturating_mul(2)));
    }
    counts
}
