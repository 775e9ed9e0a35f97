//! Minimum set cover: greedy and branch-and-bound.

use crate::error::{Error, Result};
use fixedbitset::FixedBitSet;

/// Largest candidate family accepted by the exact solver.
pub const EXACT_CANDIDATE_LIMIT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverMode {
    Exact,
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetCoverSolution {
    /// Indices into the candidate family.
    pub chosen: Vec<usize>,
    pub optimal: bool,
}

/// Covers `0..universe` with as few of `sets` as possible.
pub fn solve_min_cover(sets: &[FixedBitSet], universe: usize, mode: CoverMode) -> Result<SetCoverSolution> {
    if mode == CoverMode::Exact && sets.len() > EXACT_CANDIDATE_LIMIT {
        return Err(Error::ExactLimit { limit: EXACT_CANDIDATE_LIMIT, got: sets.len() });
    }
    let mut reach = FixedBitSet::with_capacity(universe);
    for s in sets {
        reach.union_with(s);
    }
    if reach.count_ones(..universe) < universe {
        let e = (0..universe).find(|&e| !reach.contains(e)).unwrap();
        return Err(Error::InvalidParameter(format!("element {e} lies in no candidate set")));
    }
    let greedy = greedy_cover(sets, universe);
    if mode == CoverMode::Greedy {
        return Ok(SetCoverSolution { chosen: greedy, optimal: false });
    }
    let mut solver = BranchAndBound::new(sets, universe, greedy);
    let mut all = FixedBitSet::with_capacity(universe);
    all.insert_range(..universe);
    let mut chosen = Vec::new();
    solver.search(&all, &mut chosen);
    let mut best = solver.best;
    best.sort_unstable();
    Ok(SetCoverSolution { chosen: best, optimal: true })
}

fn greedy_cover(sets: &[FixedBitSet], universe: usize) -> Vec<usize> {
    let mut uncovered = FixedBitSet::with_capacity(universe);
    uncovered.insert_range(..universe);
    let mut chosen = Vec::new();
    while !uncovered.is_clear() {
        let (best, _) = sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.intersection_count(&uncovered)))
            .fold((usize::MAX, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        uncovered.difference_with(&sets[best]);
        chosen.push(best);
    }
    chosen
}

struct BranchAndBound<'a> {
    sets: &'a [FixedBitSet],
    /// Candidate sets containing each element.
    holders: Vec<Vec<usize>>,
    /// Elements ordered by how few sets contain them.
    by_rarity: Vec<usize>,
    best: Vec<usize>,
}

impl<'a> BranchAndBound<'a> {
    fn new(sets: &'a [FixedBitSet], universe: usize, incumbent: Vec<usize>) -> Self {
        let mut holders = vec![Vec::new(); universe];
        for (i, s) in sets.iter().enumerate() {
            for e in s.ones() {
                if e < universe {
                    holders[e].push(i);
                }
            }
        }
        let mut by_rarity: Vec<usize> = (0..universe).collect();
        by_rarity.sort_by_key(|&e| holders[e].len());
        BranchAndBound { sets, holders, by_rarity, best: incumbent }
    }

    /// Elements no two of which share a candidate set each need their own set.
    fn packing_bound(&self, uncovered: &FixedBitSet) -> usize {
        let mut used = FixedBitSet::with_capacity(self.sets.len());
        let mut count = 0;
        for &e in &self.by_rarity {
            if uncovered.contains(e) && self.holders[e].iter().all(|&s| !used.contains(s)) {
                count += 1;
                for &s in &self.holders[e] {
                    used.insert(s);
                }
            }
        }
        count
    }

    fn search(&mut self, uncovered: &FixedBitSet, chosen: &mut Vec<usize>) {
        if uncovered.is_clear() {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        if chosen.len() + 1 >= self.best.len() {
            return;
        }
        if chosen.len() + self.packing_bound(uncovered) >= self.best.len() {
            return;
        }
        let e = *self.by_rarity.iter().find(|&&e| uncovered.contains(e)).unwrap();
        let mut cands: Vec<(usize, usize)> = self.holders[e]
            .iter()
            .map(|&s| (s, self.sets[s].intersection_count(uncovered)))
            .collect();
        cands.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (s, _) in cands {
            let mut next = uncovered.clone();
            next.difference_with(&self.sets[s]);
            chosen.push(s);
            self.search(&next, chosen);
            chosen.pop();
            if chosen.len() + 1 >= self.best.len() {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, items: &[usize]) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(n);
        items.iter().for_each(|&i| s.insert(i));
        s
    }

    /// Exhaustive minimum over all subsets.
    fn brute(sets: &[FixedBitSet], n: usize) -> usize {
        (0u32..1 << sets.len())
            .filter(|mask| {
                let mut u = FixedBitSet::with_capacity(n);
                (0..sets.len()).filter(|i| mask >> i & 1 == 1).for_each(|i| u.union_with(&sets[i]));
                u.count_ones(..) == n
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn greedy_trap_is_solved_exactly() {
        // greedy takes the big middle set first and needs three
        let n = 6;
        let sets = vec![set(n, &[0, 1, 2]), set(n, &[3, 4, 5]), set(n, &[1, 2, 3, 4]), set(n, &[0]), set(n, &[5])];
        let g = solve_min_cover(&sets, n, CoverMode::Greedy).unwrap();
        assert_eq!(g.chosen.len(), 3);
        let e = solve_min_cover(&sets, n, CoverMode::Exact).unwrap();
        assert_eq!(e.chosen, vec![0, 1]);
        assert_eq!(brute(&sets, n), 2);
    }

    #[test]
    fn random_families_match_brute_force() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let n = 4 + (next() % 8) as usize;
            let m = 3 + (next() % 9) as usize;
            let mut sets: Vec<FixedBitSet> = (0..m)
                .map(|_| {
                    let mut s = FixedBitSet::with_capacity(n);
                    (0..n).filter(|_| next() % 3 == 0).for_each(|i| s.insert(i));
                    s
                })
                .collect();
            (0..n).for_each(|e| sets[e % m].insert(e));
            let sol = solve_min_cover(&sets, n, CoverMode::Exact).unwrap();
            assert_eq!(sol.chosen.len(), brute(&sets, n));
        }
    }

    #[test]
    fn limit_and_infeasible() {
        let sets = vec![FixedBitSet::with_capacity(1); EXACT_CANDIDATE_LIMIT + 1];
        assert!(matches!(solve_min_cover(&sets, 1, CoverMode::Exact), Err(Error::ExactLimit { .. })));
        assert!(solve_min_cover(&[set(2, &[0])], 2, CoverMode::Greedy).is_err());
    }
}
