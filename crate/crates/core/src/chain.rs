//! ε-monotonic chains and ε-monotonic chainability.
//!
//! A chain joining `x` to `y` is a sequence `x = u0, u1, ..., um = y` that is
//! monotone in the relation and whose consecutive distances are all strictly
//! below `epsilon`. Searches return the chain with fewest hops, ties broken by
//! the lexicographically smallest vertex sequence, ascending before
//! descending.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::space::{check_epsilon, FiniteInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `u[i-1] ≼ u[i]`
    #[serde(rename = "asc")]
    Ascending,
    /// `u[i] ≼ u[i-1]`
    #[serde(rename = "desc")]
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub direction: Direction,
    pub vertices: Vec<usize>,
    #[serde(rename = "steps")]
    pub step_dists: Vec<f64>,
    pub epsilon: f64,
}

impl Chain {
    /// Number of hops `m`.
    pub fn hops(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("chain has at least one vertex")
    }

    /// Largest consecutive distance, 0 for the single-vertex chain.
    pub fn max_step(&self) -> f64 {
        self.step_dists.iter().copied().fold(0.0, f64::max)
    }

    /// Re-checks every chain invariant against `inst`.
    pub fn verify(&self, inst: &FiniteInstance) -> bool {
        if self.vertices.is_empty() || self.step_dists.len() != self.hops() {
            return false;
        }
        if self.vertices.iter().any(|&v| v >= inst.len()) {
            return false;
        }
        self.vertices.windows(2).zip(&self.step_dists).all(|(w, &d)| {
            let (a, b) = (w[0], w[1]);
            let related = match self.direction {
                Direction::Ascending => inst.relation.holds(a, b),
                Direction::Descending => inst.relation.holds(b, a),
            };
            related && d == inst.dist(a, b) && d < self.epsilon
        })
    }
}

/// Successors of `u` for the given direction: `v` with the relation step and
/// `d(u, v) < epsilon`.
fn step_ok(inst: &FiniteInstance, dir: Direction, u: usize, v: usize, epsilon: f64) -> bool {
    let related = match dir {
        Direction::Ascending => inst.relation.holds(u, v),
        Direction::Descending => inst.relation.holds(v, u),
    };
    related && inst.dist(u, v) < epsilon
}

/// Shortest chain in one direction, lexicographically smallest among the
/// shortest. Runs a BFS backwards from `y` for hop distances, then walks
/// forward from `x` picking the smallest admissible successor.
fn shortest_in_direction(
    inst: &FiniteInstance,
    x: usize,
    y: usize,
    epsilon: f64,
    dir: Direction,
) -> Option<Vec<usize>> {
    let n = inst.len();
    let mut to_target = vec![usize::MAX; n];
    to_target[y] = 0;
    let mut queue = VecDeque::from([y]);
    while let Some(v) = queue.pop_front() {
        for u in 0..n {
            if to_target[u] == usize::MAX && u != v && step_ok(inst, dir, u, v, epsilon) {
                to_target[u] = to_target[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if to_target[x] == usize::MAX {
        return None;
    }
    let mut path = vec![x];
    let mut u = x;
    while u != y {
        let next = (0..n)
            .find(|&v| to_target[v] == to_target[u] - 1 && step_ok(inst, dir, u, v, epsilon))
            .expect("BFS layer has a successor");
        path.push(next);
        u = next;
    }
    Some(path)
}

/// Finds an ε-monotonic chain from `x` to `y`, or `None` if no chain exists in
/// either direction. `x == y` yields the single-vertex chain.
pub fn find_monotonic_chain(inst: &FiniteInstance, x: usize, y: usize, epsilon: f64) -> Result<Option<Chain>> {
    inst.check_point(x)?;
    inst.check_point(y)?;
    check_epsilon(epsilon)?;
    for dir in [Direction::Ascending, Direction::Descending] {
        if let Some(vertices) = shortest_in_direction(inst, x, y, epsilon, dir) {
            let step_dists = vertices.windows(2).map(|w| inst.dist(w[0], w[1])).collect();
            return Ok(Some(Chain { direction: dir, vertices, step_dists, epsilon }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainabilityReport {
    pub chainable: bool,
    pub epsilon: f64,
    /// First comparable pair (row-major, `x < y`) with no chain.
    pub witness: Option<(usize, usize)>,
}

/// Points reachable from `x` by ascending steps shorter than `epsilon`.
fn ascending_reach(inst: &FiniteInstance, x: usize, epsilon: f64) -> Vec<bool> {
    let n = inst.len();
    let mut seen = vec![false; n];
    seen[x] = true;
    let mut stack = vec![x];
    while let Some(u) = stack.pop() {
        for (v, s) in seen.iter_mut().enumerate() {
            if !*s && step_ok(inst, Direction::Ascending, u, v, epsilon) {
                *s = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Whether every comparable pair is joined by an ε-monotonic chain. A
/// descending chain from `x` to `y` is an ascending chain from `y` to `x`
/// read backwards, so ascending reachability from every point decides it.
pub fn check_chainable(inst: &FiniteInstance, epsilon: f64) -> ChainabilityReport {
    let n = inst.len();
    let reach: Vec<Vec<bool>> = (0..n).into_par_iter().map(|x| ascending_reach(inst, x, epsilon)).collect();
    let witness = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .find(|&(x, y)| inst.relation.related_either(x, y) && !reach[x][y] && !reach[y][x]);
    ChainabilityReport { chainable: witness.is_none(), epsilon, witness }
}

/// Smallest epsilon (in the strict `d < epsilon` sense) at which the instance
/// is chainable: the next double above the largest bottleneck over all
/// comparable pairs.
pub fn chainability_threshold(inst: &FiniteInstance) -> Result<f64> {
    let n = inst.len();
    let has_pair = (0..n).any(|x| (x + 1..n).any(|y| inst.relation.related_either(x, y)));
    if !has_pair {
        return Err(Error::NoComparablePairs);
    }
    let mut candidates: Vec<f64> =
        inst.relation.pairs().filter(|&(i, j)| i != j).map(|(i, j)| inst.dist(i, j)).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // Chainability is monotone in epsilon; binary search the candidate list.
    let ok = |d: f64| check_chainable(inst, d.next_up()).chainable;
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    if !ok(candidates[hi]) {
        return Err(invalid("instance is not chainable at any epsilon"));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo].next_up())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{FiniteSpace, Norm, Relation, SelfMapTable};

    fn geo5(epsilon: f64) -> FiniteInstance {
        let v = [0.0, 1.0, 1.5, 1.75, 1.875];
        let space = FiniteSpace::from_coords(v.iter().map(|&x| vec![x]).collect(), Norm::L2).unwrap();
        FiniteInstance::new(
            space,
            Relation::total_index_order(5).unwrap(),
            SelfMapTable::new(vec![1, 2, 3, 4, 4]).unwrap(),
            0,
            epsilon,
            0.5,
        )
        .unwrap()
    }

    /// Enumerates every simple monotone path and keeps the shortest, then the
    /// lexicographically smallest.
    fn enumerate_best(inst: &FiniteInstance, x: usize, y: usize, eps: f64, dir: Direction) -> Option<Vec<usize>> {
        fn dfs(
            inst: &FiniteInstance,
            path: &mut Vec<usize>,
            y: usize,
            eps: f64,
            dir: Direction,
            best: &mut Option<Vec<usize>>,
        ) {
            let u = *path.last().unwrap();
            if u == y {
                let better = match best {
                    None => true,
                    Some(b) => (path.len(), path.as_slice()) < (b.len(), b.as_slice()),
                };
                if better {
                    *best = Some(path.clone());
                }
                return;
            }
            for v in 0..inst.len() {
                let rel = match dir {
                    Direction::Ascending => inst.relation.holds(u, v),
                    Direction::Descending => inst.relation.holds(v, u),
                };
                if !path.contains(&v) && rel && inst.dist(u, v) < eps {
                    path.push(v);
                    dfs(inst, path, y, eps, dir, best);
                    path.pop();
                }
            }
        }
        let mut best = None;
        dfs(inst, &mut vec![x], y, eps, dir, &mut best);
        best
    }

    #[test]
    fn geo5_chain_at_1_1() {
        let inst = geo5(1.1);
        let c = find_monotonic_chain(&inst, 0, 4, 1.1).unwrap().unwrap();
        assert_eq!(c.direction, Direction::Ascending);
        // Fewest hops: 1 -> 4 is 0.875 < 1.1, so the consecutive walk is not minimal.
        assert_eq!(c.vertices, vec![0, 1, 4]);
        assert_eq!(c.step_dists, vec![1.0, 0.875]);
        assert_eq!(Some(c.vertices.clone()), enumerate_best(&inst, 0, 4, 1.1, Direction::Ascending));
        assert!(c.verify(&inst));
    }

    #[test]
    fn geo5_no_chain_at_0_9() {
        let inst = geo5(0.9);
        assert!(find_monotonic_chain(&inst, 0, 4, 0.9).unwrap().is_none());
        assert!(enumerate_best(&inst, 0, 4, 0.9, Direction::Ascending).is_none());
        assert!(enumerate_best(&inst, 0, 4, 0.9, Direction::Descending).is_none());
    }

    #[test]
    fn trivial_chain() {
        let inst = geo5(0.1);
        let c = find_monotonic_chain(&inst, 3, 3, 0.1).unwrap().unwrap();
        assert_eq!(c.vertices, vec![3]);
        assert_eq!(c.hops(), 0);
    }

    #[test]
    fn descending_chain_when_ascending_is_impossible() {
        let inst = geo5(1.1);
        let c = find_monotonic_chain(&inst, 4, 0, 1.1).unwrap().unwrap();
        assert_eq!(c.direction, Direction::Descending);
        assert_eq!(c.vertices, vec![4, 1, 0]);
        assert_eq!(Some(c.vertices.clone()), enumerate_best(&inst, 4, 0, 1.1, Direction::Descending));
        assert!(c.verify(&inst));
    }

    #[test]
    fn boundary_step_is_rejected() {
        // d(0,1) = 1 exactly: epsilon = 1 must not admit it.
        let inst = geo5(1.0);
        assert!(find_monotonic_chain(&inst, 0, 1, 1.0).unwrap().is_none());
    }

    #[test]
    fn chainability_verdicts() {
        assert!(check_chainable(&geo5(1.1), 1.1).chainable);
        let r = check_chainable(&geo5(0.3), 0.3);
        assert!(!r.chainable);
        assert_eq!(r.witness, Some((0, 1)));
        let single = FiniteInstance::new(
            FiniteSpace::from_matrix(vec![vec![0.0]]).unwrap(),
            Relation::universal(1).unwrap(),
            SelfMapTable::identity(1),
            0,
            0.01,
            0.5,
        )
        .unwrap();
        assert!(check_chainable(&single, 0.01).chainable);
    }

    #[test]
    fn thresholds() {
        let t = chainability_threshold(&geo5(1.1)).unwrap();
        assert_eq!(t, 1.0f64.next_up());
        assert!(check_chainable(&geo5(1.1), t).chainable);
        assert!(!check_chainable(&geo5(1.1), 1.0).chainable);

        let two = FiniteInstance::new(
            FiniteSpace::from_matrix(vec![vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap(),
            Relation::from_pairs(2, &[(0, 1)]).unwrap(),
            SelfMapTable::identity(2),
            0,
            1.0,
            0.5,
        )
        .unwrap();
        assert_eq!(chainability_threshold(&two).unwrap(), 0.5f64.next_up());

        let tri = FiniteInstance::new(
            FiniteSpace::from_matrix(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap(),
            Relation::universal(3).unwrap(),
            SelfMapTable::identity(3),
            0,
            1.0,
            0.5,
        )
        .unwrap();
        assert_eq!(chainability_threshold(&tri).unwrap(), 1.0f64.next_up());

        let empty = two.clone();
        let empty = FiniteInstance { relation: Relation::empty(2).unwrap(), ..empty };
        assert!(matches!(chainability_threshold(&empty), Err(Error::NoComparablePairs)));
    }

    #[test]
    fn chain_json_shape() {
        let c = find_monotonic_chain(&geo5(1.1), 0, 2, 1.1).unwrap().unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["direction"], "asc");
        assert_eq!(v["vertices"], serde_json::json!([0, 1, 2]));
        assert_eq!(v["steps"], serde_json::json!([1.0, 0.5]));
    }
}
