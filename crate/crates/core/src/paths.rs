//! Polyline paths, image paths under a real map, and the orbit reduction.
//!
//! A [`Polyline`] is parametrized on `[0, 1]` with uniform spacing between
//! vertices, so its length is the exact supremum of chord sums. Image paths
//! are sampled: every segment is split into `r` equal pieces before the map
//! is applied, which makes image lengths lower estimates for nonlinear maps
//! and exact for affine ones.
//!
//! The orbit reduction turns a real map and a path `γ0` from `x0` to `f(x0)`
//! into a finite instance on the truncated orbit `x0, f(x0), ..., f^N(x0)`:
//! the distance between orbit indices `i < j` is the summed length of the
//! image paths `f^t(γ0)`, `i <= t < j`, the relation is the index order and
//! the last point absorbs.

use std::collections::HashMap;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::expr::{EvalError, RealMap};
use crate::space::{check_epsilon, check_k, FiniteInstance, FiniteSpace, Norm, Relation, SelfMapTable};
use crate::{TAU_ABS, TAU_REL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polyline {
    vertices: Vec<Vec<f64>>,
}

impl Polyline {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(invalid("a polyline needs at least one vertex"));
        };
        let m = first.len();
        if m == 0 {
            return Err(invalid("polyline vertices must have at least one coordinate"));
        }
        if vertices.iter().any(|v| v.len() != m) {
            return Err(invalid("polyline vertices differ in dimension"));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("polyline coordinates must be finite"));
        }
        Ok(Polyline { vertices })
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Polyline::new(vec![a, b])
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dimension(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn start(&self) -> &[f64] {
        &self.vertices[0]
    }

    pub fn end(&self) -> &[f64] {
        self.vertices.last().unwrap()
    }

    /// `γ(t)` under uniform parameter spacing.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let segments = self.vertices.len() - 1;
        if segments == 0 {
            return self.vertices[0].clone();
        }
        let s = t.clamp(0.0, 1.0) * segments as f64;
        let i = (s.floor() as usize).min(segments - 1);
        lerp(&self.vertices[i], &self.vertices[i + 1], s - i as f64)
    }

    /// Every segment split into `r` equal pieces.
    pub fn refine(&self, r: usize) -> Result<Polyline> {
        if r == 0 {
            return Err(invalid("refinement must be at least 1"));
        }
        let mut out = Vec::with_capacity((self.vertices.len() - 1) * r + 1);
        for w in self.vertices.windows(2) {
            out.extend((0..r).map(|s| lerp(&w[0], &w[1], s as f64 / r as f64)));
        }
        out.push(self.end().to_vec());
        Ok(Polyline { vertices: out })
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Sum of chord lengths at the partition points.
pub fn partition_length(path: &Polyline, partition: &[f64]) -> Result<f64> {
    let ok = partition.len() >= 2
        && partition[0] == 0.0
        && *partition.last().unwrap() == 1.0
        && partition.windows(2).all(|w| w[0] < w[1]);
    if !ok {
        return Err(invalid("partition must increase strictly from 0 to 1"));
    }
    let points: Vec<Vec<f64>> = partition.iter().map(|&t| path.point_at(t)).collect();
    Ok(points.windows(2).map(|w| Norm::L2.distance(&w[0], &w[1])).fold(0.0, |acc, d| acc + d))
}

/// Sum of segment lengths, the supremum of chord sums for a polyline.
pub fn polyline_length(path: &Polyline) -> f64 {
    path.vertices.windows(2).map(|w| Norm::L2.distance(&w[0], &w[1])).fold(0.0, |acc, d| acc + d)
}

pub fn image_polyline(map: &RealMap, path: &Polyline, refinement: usize) -> Result<Polyline> {
    check_dimension(map, path)?;
    let refined = path.refine(refinement)?;
    let vertices = refined.vertices.iter().map(|v| map.eval(v)).collect::<Result<Vec<_>, EvalError>>()?;
    Ok(Polyline { vertices })
}

fn check_dimension(map: &RealMap, path: &Polyline) -> Result<()> {
    if map.dimension() != path.dimension() {
        return Err(invalid(format!(
            "path lives in dimension {}, map in dimension {}",
            path.dimension(),
            map.dimension()
        )));
    }
    Ok(())
}

fn within_rel(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + TAU_REL * rhs.abs().max(1.0)
}

/// Both sides of the path-length and endpoint inequalities for one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop6Check {
    pub verdict: bool,
    pub path_length: f64,
    pub image_length: f64,
    pub endpoint_distance: f64,
    /// `k l(γ)`, the right-hand side of both inequalities.
    pub bound: f64,
    pub length_holds: bool,
    pub endpoint_holds: bool,
}

/// Checks `l(f γ) <= k l(γ)` and `|f γ(0) - f γ(1)| <= k l(γ)` within
/// `TAU_REL`, with the image length measured on the refined path.
pub fn check_prop6(map: &RealMap, path: &Polyline, k: f64, refinement: usize) -> Result<Prop6Check> {
    check_k(k)?;
    let image = image_polyline(map, path, refinement)?;
    let path_length = polyline_length(path);
    let image_length = polyline_length(&image);
    let endpoint_distance = Norm::L2.distance(image.start(), image.end());
    let bound = k * path_length;
    let length_holds = within_rel(image_length, bound);
    let endpoint_holds = within_rel(endpoint_distance, bound);
    Ok(Prop6Check {
        verdict: length_holds && endpoint_holds,
        path_length,
        image_length,
        endpoint_distance,
        bound,
        length_holds,
        endpoint_holds,
    })
}

/// Gap between `γ0(1)` and `f(γ0(0))`; fails when it exceeds `TAU_REL`
/// relative to the scale of `f(γ0(0))`.
fn check_endpoints(map: &RealMap, gamma0: &Polyline) -> Result<()> {
    check_dimension(map, gamma0)?;
    let fx0 = map.eval(gamma0.start())?;
    let gap = Norm::L2.distance(gamma0.end(), &fx0);
    let scale = Norm::L2.length(fx0.iter().copied()).max(1.0);
    if gap > TAU_REL * scale {
        return Err(Error::EndpointMismatch { gap });
    }
    Ok(())
}

/// Image paths `f^t(γ0)` for `t = 0..count`, computed by iterating the map
/// on the vertices of the refined `γ0`.
fn image_paths(map: &RealMap, gamma0: &Polyline, count: usize, refinement: usize) -> Result<Vec<Polyline>> {
    let refined = gamma0.refine(refinement)?;
    // Each vertex orbit is independent; collect per vertex, then transpose.
    let orbits = refined
        .vertices
        .par_iter()
        .map(|v| {
            let mut orbit = Vec::with_capacity(count);
            let mut cur = v.clone();
            for _ in 0..count {
                let next = map.eval(&cur)?;
                orbit.push(std::mem::replace(&mut cur, next));
            }
            Ok(orbit)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok((0..count).map(|t| Polyline { vertices: orbits.iter().map(|o| o[t].clone()).collect() }).collect())
}

/// `d0(f^i x0, f^j x0)`: summed lengths of `f^t(γ0)` for `t` between the two
/// indices.
pub fn orbit_d0(gamma0: &Polyline, map: &RealMap, i: usize, j: usize, refinement: usize) -> Result<f64> {
    check_endpoints(map, gamma0)?;
    let (lo, hi) = (i.min(j), i.max(j));
    let paths = image_paths(map, gamma0, hi, refinement)?;
    Ok(paths[lo..hi].iter().map(polyline_length).fold(0.0, |acc, l| acc + l))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitInstanceBundle {
    /// Points `0..=N` are the orbit indices; the metric is `d0`.
    pub instance: FiniteInstance,
    pub orbit: Vec<Vec<f64>>,
    pub ambient_dists: Vec<Vec<f64>>,
    pub d0_dists: Vec<Vec<f64>>,
    /// `l(f^t(γ0))` for `t = 0..N`.
    pub image_lengths: Vec<f64>,
    pub image_paths: Vec<Polyline>,
}

impl OrbitInstanceBundle {
    /// Largest `d(i, j) - d0(i, j)` over all index pairs.
    pub fn max_ambient_excess(&self) -> f64 {
        self.ambient_dists
            .iter()
            .flatten()
            .zip(self.d0_dists.iter().flatten())
            .map(|(d, d0)| d - d0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds the truncated orbit instance: points `f^n(x0)` for `n = 0..=N`,
/// metric `d0`, total index order, map `n ↦ min(n + 1, N)`, start 0.
pub fn build_orbit_instance(
    gamma0: &Polyline,
    map: &RealMap,
    n: usize,
    epsilon: f64,
    k: f64,
    refinement: usize,
) -> Result<OrbitInstanceBundle> {
    if n < 1 {
        return Err(invalid("orbit length N must be at least 1"));
    }
    check_epsilon(epsilon)?;
    check_k(k)?;
    check_endpoints(map, gamma0)?;
    let paths = image_paths(map, gamma0, n, refinement)?;
    let image_lengths: Vec<f64> = paths.iter().map(polyline_length).collect();
    if let Some(index) = image_lengths.iter().position(|&l| l <= TAU_ABS) {
        return Err(Error::DegenerateOrbit { index });
    }

    let mut orbit: Vec<Vec<f64>> = paths.iter().map(|p| p.start().to_vec()).collect();
    orbit.push(paths[n - 1].end().to_vec());

    let size = n + 1;
    let d0_dists: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    let (lo, hi) = (i.min(j), i.max(j));
                    image_lengths[lo..hi].iter().fold(0.0, |acc, l| acc + l)
                })
                .collect()
        })
        .collect();
    let ambient_dists: Vec<Vec<f64>> =
        orbit.iter().map(|a| orbit.iter().map(|b| Norm::L2.distance(a, b)).collect()).collect();

    let labels = (0..size).map(|t| format!("f^{t}(x0)")).collect();
    let space = FiniteSpace::from_matrix(d0_dists.clone())?.with_labels(labels)?;
    let table = SelfMapTable::new((0..size).map(|t| (t + 1).min(n)).collect())?;
    let instance = FiniteInstance::new(space, Relation::total_index_order(size)?, table, 0, epsilon, k)?;
    Ok(OrbitInstanceBundle { instance, orbit, ambient_dists, d0_dists, image_lengths, image_paths: paths })
}

/// `k^n l(γ0) / (1 - k)`, bounding `d(f^m x0, f^n x0)` for every `m > n`.
pub fn orbit_tail_bound(gamma0_length: f64, k: f64, n: usize) -> Result<f64> {
    check_k(k)?;
    if !(gamma0_length >= 0.0 && gamma0_length.is_finite()) {
        return Err(invalid(format!("path length must be finite and non-negative, got {gamma0_length}")));
    }
    Ok(k.powi(i32::try_from(n).unwrap_or(i32::MAX)) * gamma0_length / (1.0 - k))
}

/// Upper estimate of the path metric between `x` and `y`: the shortest
/// route through the catalogue, where entries are joined at endpoints that
/// agree within `TAU_REL`. Paths may be traversed in either direction.
pub fn path_metric_estimate(catalogue: &[Polyline], x: &[f64], y: &[f64]) -> Result<f64> {
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let node_of = |p: &[f64], nodes: &mut Vec<Vec<f64>>| -> usize {
        match nodes.iter().position(|q| same_point(p, q)) {
            Some(i) => i,
            None => {
                nodes.push(p.to_vec());
                nodes.len() - 1
            }
        }
    };
    let mut graph = UnGraph::<(), f64>::new_undirected();
    let mut index: HashMap<usize, NodeIndex> = HashMap::new();
    for path in catalogue {
        let a = node_of(path.start(), &mut nodes);
        let b = node_of(path.end(), &mut nodes);
        for v in [a, b] {
            index.entry(v).or_insert_with(|| graph.add_node(()));
        }
        graph.add_edge(index[&a], index[&b], polyline_length(path));
    }
    let find = |p: &[f64]| nodes.iter().position(|q| same_point(p, q)).map(|i| index[&i]);
    let (Some(sx), Some(sy)) = (find(x), find(y)) else {
        return Err(Error::NoPathKnown);
    };
    dijkstra(&graph, sx, Some(sy), |e| *e.weight()).get(&sy).copied().ok_or(Error::NoPathKnown)
}

fn same_point(p: &[f64], q: &[f64]) -> bool {
    p.len() == q.len() && Norm::L2.distance(p, q) <= TAU_REL * Norm::L2.length(q.iter().copied()).max(1.0)
}
