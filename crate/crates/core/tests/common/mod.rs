//! Reference computations written straight from the definitions, sharing no
//! code with the library beyond the tree's parent links and the weight tables.
#![allow(dead_code)]

use rand::Rng;
use std::io::Write;
use treentropy::{NodeId, Tree, WeightSystem};

pub const QS: [f64; 3] = [1.5, 2.0, 3.0];

/// Random rooted tree on `n` nodes; `shape` mixes bushy and deep growth.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> Tree {
    let window = match rng.random_range(0..3) {
        0 => usize::MAX,
        1 => 3,
        _ => 1 + rng.random_range(0..8usize),
    };
    let edges: String = (1..n)
        .map(|c| {
            let lo = c.saturating_sub(window);
            format!("{c} {}\n", rng.random_range(lo..c))
        })
        .collect();
    Tree::from_edge_list(&edges).unwrap()
}

/// Random positive `alpha` with non-increasing `sigma`, or constant `sigma`.
pub fn random_weights(rng: &mut impl Rng, tree: &Tree, q: f64) -> WeightSystem<f64> {
    let n = tree.len();
    let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..2.0)).collect();
    let flat = rng.random_bool(0.2);
    let top = rng.random_range(0.5..3.0);
    let mut sigma = vec![top; n];
    for i in 1..n {
        let p = tree.parent(NodeId(i as u32)).unwrap().index();
        sigma[i] = if flat { top } else { sigma[p] * rng.random_range(0.2..=1.0) };
    }
    WeightSystem::from_tables(tree, alpha, sigma, q).unwrap()
}

pub fn parent(tree: &Tree, t: usize) -> Option<usize> {
    tree.parent(NodeId(t as u32)).map(|p| p.index())
}

/// Nodes from `t` up to the root, inclusive.
pub fn root_path(tree: &Tree, t: usize) -> Vec<usize> {
    let mut out = vec![t];
    let mut cur = t;
    while let Some(p) = parent(tree, cur) {
        out.push(p);
        cur = p;
    }
    out
}

pub fn is_ancestor(tree: &Tree, a: usize, b: usize) -> bool {
    root_path(tree, b).contains(&a)
}

pub fn meet(tree: &Tree, a: usize, b: usize) -> usize {
    let pa = root_path(tree, a);
    let pb = root_path(tree, b);
    *pa.iter().find(|x| pb.contains(x)).unwrap()
}

/// `max_{v in (t, s]} sigma(v) (sum_{r in (t, v]} alpha(r)^q)^(1/q)` for `t <= s`.
pub fn dist_down(tree: &Tree, ws: &WeightSystem<f64>, t: usize, s: usize) -> f64 {
    let q = ws.q();
    let path = root_path(tree, s);
    let stop = path.iter().position(|&x| x == t).expect("t must be an ancestor of s");
    let mut acc = 0.0;
    let mut best = 0.0f64;
    for &v in path[..stop].iter().rev() {
        acc += ws.alphas()[v].powf(q);
        best = best.max(ws.sigmas()[v] * acc.powf(1.0 / q));
    }
    best
}

pub fn dist(tree: &Tree, ws: &WeightSystem<f64>, t: usize, s: usize) -> f64 {
    let m = meet(tree, t, s);
    dist_down(tree, ws, m, t) + dist_down(tree, ws, m, s)
}

pub fn matrix(tree: &Tree, ws: &WeightSystem<f64>) -> Vec<f64> {
    let n = tree.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = dist(tree, ws, i, j);
        }
    }
    d
}

/// Six radii from just above the diameter down to below the smallest gap.
pub fn eps_grid(d: &[f64]) -> Vec<f64> {
    let hi = d.iter().copied().fold(0.0, f64::max);
    let lo = d.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return vec![1.0];
    }
    let top = 1.05 * hi;
    let ratio = (0.8 * lo / top).powf(0.2);
    (0..6).map(|k| top * ratio.powi(k)).collect()
}

/// Smallest number of sets whose union is everything, by enumeration.
pub fn brute_min_cover(covers: &[u64], n: usize) -> usize {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let m = covers.len();
    let mut best = usize::MAX;
    for mask in 1u64..(1u64 << m) {
        let k = mask.count_ones() as usize;
        if k >= best {
            continue;
        }
        let mut u = 0;
        for (c, &cv) in covers.iter().enumerate() {
            if mask >> c & 1 == 1 {
                u |= cv;
            }
        }
        if u == full {
            best = k;
        }
    }
    best
}

/// Minimum ball cover with centers in the tree.
pub fn brute_ball(d: &[f64], n: usize, eps: f64) -> usize {
    let covers: Vec<u64> = (0..n).map(|c| (0..n).filter(|&t| d[c * n + t] < eps).fold(0, |m, t| m | 1 << t)).collect();
    brute_min_cover(&covers, n)
}

/// Minimum order net: every node needs an ancestor center within `eps`.
pub fn brute_order(tree: &Tree, d: &[f64], eps: f64) -> usize {
    let n = tree.len();
    let covers: Vec<u64> = (0..n)
        .map(|c| (0..n).filter(|&t| is_ancestor(tree, c, t) && d[c * n + t] < eps).fold(0, |m, t| m | 1 << t))
        .collect();
    brute_min_cover(&covers, n)
}

/// Order-cover check for constant `sigma`, where `d(c, t)^q` is the sum of
/// `alpha^q` strictly below `c` on the path to `t`.
pub fn order_cover_holds_flat_sigma(tree: &Tree, ws: &WeightSystem<f64>, eps: f64, centers: &[NodeId]) -> bool {
    let q = ws.q();
    let s = ws.sigmas()[0];
    let mut is_center = vec![false; tree.len()];
    for c in centers {
        is_center[c.index()] = true;
    }
    (0..tree.len()).all(|t| {
        let mut acc = 0.0f64;
        let mut cur = t;
        loop {
            if is_center[cur] {
                return true;
            }
            acc += ws.alphas()[cur].powf(q);
            if s * acc.powf(1.0 / q) >= eps {
                return false;
            }
            match parent(tree, cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    })
}

/// Ordinary least-squares slope and intercept.
pub fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Writes one verdict line straight to stdout so it survives output capture.
pub fn report(criterion: u32, ok: bool, detail: &str) {
    let line = format!("criterion {criterion}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

pub fn le_rel(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * rhs.abs()
}
