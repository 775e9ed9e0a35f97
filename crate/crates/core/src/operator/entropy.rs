//! Brute-force brackets for dyadic entropy numbers of `V` on tiny trees.
//!
//! `e_n(V)` is the smallest radius at which `V(B_{l_1})`, the absolutely
//! convex hull of the columns, is covered by `2^(n-1)` balls of `l_q`.

use super::OperatorBundle;
use crate::covering::separated_to_intervals;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::NodeId;

pub const MAX_NODES: usize = 12;
pub const MAX_INDEX: u32 = 4;

#[derive(Clone, Debug)]
pub struct EntropyOptions {
    /// l_1 budgets `B`: hull points are approximated on the grid `(1/B) Z^m`.
    pub budgets: Vec<usize>,
    /// Grids larger than this are skipped.
    pub max_grid_points: u64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions { budgets: vec![2, 4, 6, 8], max_grid_points: 2_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRun {
    pub budget: usize,
    pub grid_points: u64,
    /// Discretization error added to the covering radius.
    pub delta: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyBracket {
    pub n: u32,
    pub lower: f64,
    pub upper: f64,
    /// Half the best dispersion of `2^(n-1) + 1` hull vertices.
    pub lower_dispersion: f64,
    /// Bound through an inscribed `Id: l_1^m -> l_q^m`.
    pub lower_inscription: f64,
    pub grid_runs: Vec<GridRun>,
}

/// Brackets `e_n(V)` for `n <= 4` on trees with at most 12 nodes.
pub fn entropy_bruteforce<F: Scalar>(ob: &OperatorBundle<F>, n: u32, opts: &EntropyOptions) -> Result<EntropyBracket> {
    let tree = ob.tree();
    if tree.len() > MAX_NODES {
        return Err(Error::InvalidParameter(format!("entropy search needs at most {MAX_NODES} nodes, got {}", tree.len())));
    }
    if n == 0 || n > MAX_INDEX {
        return Err(Error::InvalidParameter(format!("entropy index must lie in 1..={MAX_INDEX}, got {n}")));
    }
    let q = ob.weights().q().to_f64_lossy();
    let dim = tree.len();
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|t| {
            let mut v = vec![0.0; dim];
            for &(r, x) in ob.column(NodeId(t as u32)).entries() {
                v[r.index()] = x.to_f64_lossy();
            }
            v
        })
        .collect();
    let e1 = cols.iter().map(|c| norm(c, q)).fold(0.0, f64::max);
    let mut upper = e1;
    let mut out = EntropyBracket {
        n: 1,
        lower: e1,
        upper: e1,
        lower_dispersion: e1,
        lower_inscription: 0.0,
        grid_runs: Vec::new(),
    };
    for j in 2..=n {
        let k = 1usize << (j - 1);
        let lower_dispersion = dispersion(&cols, q, k + 1) / 2.0;
        let lower_inscription = inscription_bound(ob, k + 1, q)?;
        let mut runs = Vec::new();
        for &b in &opts.budgets {
            let points = grid_size(dim, b);
            if points > opts.max_grid_points {
                continue;
            }
            let delta = discretization_error(&cols, q, b);
            let radius = grid_k_center(&cols, q, b, k);
            upper = upper.min(radius + delta);
            runs.push(GridRun { budget: b, grid_points: points, delta, radius });
        }
        let lower = lower_dispersion.max(lower_inscription);
        debug_assert!(lower <= upper * (1.0 + 1e-12));
        out = EntropyBracket { n: j, lower, upper, lower_dispersion, lower_inscription, grid_runs: runs };
    }
    Ok(out)
}

fn norm(v: &[f64], q: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

fn dist(a: &[f64], b: &[f64], q: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Largest `D` such that `size` points of `{0, +-c_t}` are pairwise `>= D` apart.
fn dispersion(cols: &[Vec<f64>], q: f64, size: usize) -> f64 {
    let mut pts: Vec<Vec<f64>> = vec![vec![0.0; cols[0].len()]];
    for c in cols {
        pts.push(c.clone());
        pts.push(c.iter().map(|x| -x).collect());
    }
    let p = pts.len();
    if size > p {
        return 0.0;
    }
    let mut d = vec![vec![0.0; p]; p];
    let mut values = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            d[i][j] = dist(&pts[i], &pts[j], q);
            d[j][i] = d[i][j];
            values.push(d[i][j]);
        }
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let feasible = |th: f64| -> bool {
        let adj: Vec<u64> = (0..p)
            .map(|i| (0..p).filter(|&j| j != i && d[i][j] >= th).fold(0u64, |m, j| m | 1 << j))
            .collect();
        has_clique(&adj, (1u64 << p) - 1, size)
    };
    // feasibility is monotone in the threshold
    let (mut lo, mut hi) = (0usize, values.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(values[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo == 0 { 0.0 } else { values[lo - 1] }
}

fn has_clique(adj: &[u64], cand: u64, need: usize) -> bool {
    if need == 0 {
        return true;
    }
    if (cand.count_ones() as usize) < need {
        return false;
    }
    let mut rest = cand;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        if has_clique(adj, rest & adj[v], need - 1) {
            return true;
        }
    }
    false
}

/// Best bound from families of at least `size` disjoint intervals.
fn inscription_bound<F: Scalar>(ob: &OperatorBundle<F>, size: usize, q: f64) -> Result<f64> {
    let me = ob.metric();
    let tree = ob.tree();
    let mut scales: Vec<F> = Vec::new();
    for s in 0..tree.len() {
        for t in tree.path_up(NodeId(s as u32)).skip(1) {
            scales.push(me.dist(t, NodeId(s as u32)));
        }
    }
    let mut best: f64 = 0.0;
    for eps in scales {
        let fam = separated_to_intervals(me, eps)?;
        if fam.intervals.len() >= size {
            let min_d = fam
                .intervals
                .iter()
                .map(|&(t, s)| me.dist(t, s).to_f64_lossy())
                .fold(f64::INFINITY, f64::min);
            best = best.max(min_d * 2f64.powf(1.0 / q) / 4.0);
        }
    }
    Ok(best)
}

/// Number of `lambda in (1/B) Z^m` with `sum |lambda| <= 1`.
fn grid_size(m: usize, b: usize) -> u64 {
    let binom = |n: usize, k: usize| -> u64 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
    };
    (0..=m.min(b)).map(|j| binom(m, j).saturating_mul(binom(b, j)).saturating_mul(1 << j)).sum()
}

/// `max ||sum r_t c_t||_q` over residuals `|r_t| < 1/B` with `sum |r_t| <= 1`;
/// columns are nonnegative, so the worst case puts `1/B` on `B` columns.
fn discretization_error(cols: &[Vec<f64>], q: f64, b: usize) -> f64 {
    let m = cols.len();
    let k = b.min(m);
    let h = 1.0 / b as f64;
    let mut best: f64 = 0.0;
    let mut sum = vec![0.0; cols[0].len()];
    fn rec(cols: &[Vec<f64>], q: f64, from: usize, left: usize, sum: &mut Vec<f64>, best: &mut f64) {
        if left == 0 {
            *best = best.max(norm(sum, q));
            return;
        }
        for i in from..=cols.len() - left {
            sum.iter_mut().zip(&cols[i]).for_each(|(s, c)| *s += c);
            rec(cols, q, i + 1, left - 1, sum, best);
            sum.iter_mut().zip(&cols[i]).for_each(|(s, c)| *s -= c);
        }
    }
    rec(cols, q, 0, k, &mut sum, &mut best);
    h * best
}

/// Visits the image of every grid point, in a fixed order.
fn for_each_grid_image(cols: &[Vec<f64>], b: usize, f: &mut impl FnMut(&[f64])) {
    let h = 1.0 / b as f64;
    let mut img = vec![0.0; cols[0].len()];
    fn rec(cols: &[Vec<f64>], h: f64, i: usize, left: usize, img: &mut Vec<f64>, f: &mut impl FnMut(&[f64])) {
        if i == cols.len() {
            f(img);
            return;
        }
        rec(cols, h, i + 1, left, img, f);
        for step in 1..=left {
            for sign in [1.0, -1.0] {
                let w = sign * step as f64 * h;
                img.iter_mut().zip(&cols[i]).for_each(|(x, c)| *x += w * c);
                rec(cols, h, i + 1, left - step, img, f);
                img.iter_mut().zip(&cols[i]).for_each(|(x, c)| *x -= w * c);
            }
        }
    }
    rec(cols, h, 0, b, &mut img, f);
}

/// Farthest-point `k`-center radius on the grid images, seeded at the origin.
fn grid_k_center(cols: &[Vec<f64>], q: f64, b: usize, k: usize) -> f64 {
    let total = grid_size(cols.len(), b) as usize;
    let mut nearest = vec![f64::INFINITY; total];
    let mut center = vec![0.0; cols[0].len()];
    let mut radius = 0.0;
    for round in 0..k {
        let mut idx = 0;
        let mut far = (f64::NEG_INFINITY, Vec::new());
        for_each_grid_image(cols, b, &mut |img| {
            let d = dist(img, &center, q).min(nearest[idx]);
            nearest[idx] = d;
            if d > far.0 {
                far = (d, img.to_vec());
            }
            idx += 1;
        });
        radius = far.0;
        if round + 1 < k {
            center = far.1;
        }
    }
    radius
}

/// `(log(1 + m/n) / n)^(1/q')`, the shape of `e_n(Id: l_1^m -> l_q^m)`.
pub fn schuett_shape(m: u64, n: u64, q: f64) -> Result<f64> {
    if m == 0 || n == 0 || ((m as f64).ln() > n as f64) || n > m {
        return Err(Error::InvalidParameter(format!("need log m <= n <= m, got m = {m}, n = {n}")));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q must be at least 1, got {q}")));
    }
    let inv_conj = 1.0 - 1.0 / q;
    Ok(((1.0 + m as f64 / n as f64).ln() / n as f64).powf(inv_conj))
}
