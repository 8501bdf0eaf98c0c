//! Finite metric spaces, transitive relations and self-map tables.
//!
//! Relations only have to be transitive. Reflexive pairs are allowed but never
//! assumed, so `x` is comparable to itself exactly when the table says so.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::TAU_REL;

/// Largest point count accepted for explicit tables.
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn length(self, v: impl IntoIterator<Item = f64>) -> f64 {
        let it = v.into_iter();
        match self {
            Norm::L1 => it.map(f64::abs).fold(0.0, |acc, c| acc + c),
            Norm::L2 => it.map(|c| c * c).fold(0.0, |acc, s| acc + s).sqrt(),
            Norm::Linf => it.map(f64::abs).fold(0.0, f64::max),
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.length(a.iter().zip(b).map(|(x, y)| x - y))
    }
}

/// Point coordinates the distance table was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Vec<Vec<f64>>,
    pub norm: Norm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    n: usize,
    labels: Option<Vec<String>>,
    dist: Vec<f64>,
    embedding: Option<Embedding>,
}

impl FiniteSpace {
    /// Builds a space from an explicit distance table. Only the shape and
    /// finiteness are checked here; metric axioms are checked by
    /// [`validate_metric`].
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(invalid("distance table is empty"));
        }
        if n > MAX_POINTS {
            return Err(invalid(format!("{n} points exceeds the limit of {MAX_POINTS}")));
        }
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(invalid(format!("entry ({i}, {j}) is not finite")));
            }
            dist.extend_from_slice(row);
        }
        Ok(FiniteSpace { n, labels: None, dist, embedding: None })
    }

    /// Builds a space from point coordinates under the given norm.
    pub fn from_coords(coords: Vec<Vec<f64>>, norm: Norm) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(invalid("coordinate list is empty"));
        }
        if n > MAX_POINTS {
            return Err(invalid(format!("{n} points exceeds the limit of {MAX_POINTS}")));
        }
        let dim = coords[0].len();
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(invalid(format!("point {i} has dimension {}, expected {dim}", c.len())));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("point {i} has a non-finite coordinate")));
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = norm.distance(&coords[i], &coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(FiniteSpace { n, labels: None, dist, embedding: Some(Embedding { coords, norm }) })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(invalid(format!("{} labels for {} points", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axiom", rename_all = "kebab-case")]
pub enum MetricViolation {
    NonZeroDiagonal { i: usize, value: f64 },
    Asymmetric { i: usize, j: usize },
    NonPositive { i: usize, j: usize, value: f64 },
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<MetricViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violated metric axiom. Triangle violations are reported as
/// `(i, j, k)` with `d(i,k) > d(i,j) + d(j,k)` beyond the relative tolerance.
pub fn validate_metric(space: &FiniteSpace) -> ValidationReport {
    let n = space.len();
    let mut violations = Vec::new();
    for i in 0..n {
        let d = space.dist(i, i);
        if d != 0.0 {
            violations.push(MetricViolation::NonZeroDiagonal { i, value: d });
        }
        for j in i + 1..n {
            if space.dist(i, j) != space.dist(j, i) {
                violations.push(MetricViolation::Asymmetric { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && space.dist(i, j) <= 0.0 {
                violations.push(MetricViolation::NonPositive { i, j, value: space.dist(i, j) });
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let direct = space.dist(i, k);
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let via = space.dist(i, j) + space.dist(j, k);
                if direct > via + TAU_REL * via {
                    violations.push(MetricViolation::Triangle { i, j, k, excess: direct - via });
                }
            }
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    ExplicitEdges,
    TotalIndexOrder,
    StrictIndexOrder,
    Universal,
    ComponentwiseLe,
}

/// Binary relation on `0..n` stored as a dense table; `holds(i, j)` reads
/// `i ≼ j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    n: usize,
    holds: Vec<bool>,
    kind: RelationKind,
}

impl Relation {
    pub fn from_table(n: usize, holds: Vec<bool>, kind: RelationKind) -> Result<Self> {
        if n > MAX_POINTS {
            return Err(invalid(format!("{n} points exceeds the limit of {MAX_POINTS}")));
        }
        if holds.len() != n * n {
            return Err(invalid(format!("relation table has {} cells, expected {}", holds.len(), n * n)));
        }
        Ok(Relation { n, holds, kind })
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut rel = Relation::empty(n)?;
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(invalid(format!("edge ({i}, {j}) out of range for {n} points")));
            }
            rel.holds[i * n + j] = true;
        }
        Ok(rel)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Relation::from_table(n, vec![false; n * n], RelationKind::ExplicitEdges)
    }

    fn indexed(n: usize, kind: RelationKind, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let holds = (0..n * n).map(|c| f(c / n, c % n)).collect();
        Relation::from_table(n, holds, kind)
    }

    /// `i ≼ j ⟺ i ≤ j`.
    pub fn total_index_order(n: usize) -> Result<Self> {
        Relation::indexed(n, RelationKind::TotalIndexOrder, |i, j| i <= j)
    }

    /// `i ≼ j ⟺ i < j`; transitive and irreflexive.
    pub fn strict_index_order(n: usize) -> Result<Self> {
        Relation::indexed(n, RelationKind::StrictIndexOrder, |i, j| i < j)
    }

    pub fn universal(n: usize) -> Result<Self> {
        Relation::indexed(n, RelationKind::Universal, |_, _| true)
    }

    /// Componentwise `≤` between coordinate vectors.
    pub fn componentwise_le(coords: &[Vec<f64>]) -> Result<Self> {
        Relation::indexed(coords.len(), RelationKind::ComponentwiseLe, |i, j| {
            coords[i].iter().zip(&coords[j]).all(|(a, b)| a <= b)
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        !self.holds.iter().any(|&h| h)
    }

    pub fn kind(&self) -> RelationKind {
        self.kind
    }

    #[inline]
    pub fn holds(&self, i: usize, j: usize) -> bool {
        self.holds[i * self.n + j]
    }

    /// `i ≼ j` or `j ≼ i`.
    #[inline]
    pub fn related_either(&self, i: usize, j: usize) -> bool {
        self.holds(i, j) || self.holds(j, i)
    }

    /// All related pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.holds.iter().enumerate().filter(|(_, &h)| h).map(move |(c, _)| (c / n, c % n))
    }

    pub fn table(&self) -> &[bool] {
        &self.holds
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TransitivityReport {
    /// Triples `(i, j, k)` with `i ≼ j`, `j ≼ k` and not `i ≼ k`.
    pub violations: Vec<(usize, usize, usize)>,
}

impl TransitivityReport {
    pub fn is_transitive(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_relation(relation: &Relation) -> TransitivityReport {
    let n = relation.len();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !relation.holds(i, j) {
                continue;
            }
            for k in 0..n {
                if relation.holds(j, k) && !relation.holds(i, k) {
                    violations.push((i, j, k));
                }
            }
        }
    }
    TransitivityReport { violations }
}

/// Smallest transitive relation containing `relation` (Warshall). The kind is
/// kept when nothing had to be added.
pub fn transitive_closure(relation: &Relation) -> Relation {
    let n = relation.len();
    let mut holds = relation.holds.clone();
    for j in 0..n {
        for i in 0..n {
            if !holds[i * n + j] {
                continue;
            }
            for k in 0..n {
                if holds[j * n + k] {
                    holds[i * n + k] = true;
                }
            }
        }
    }
    let kind = if holds == relation.holds { relation.kind } else { RelationKind::ExplicitEdges };
    Relation { n, holds, kind }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparability {
    LeftLe,
    RightLe,
    Both,
    Incomparable,
}

impl Comparability {
    pub fn is_comparable(self) -> bool {
        self != Comparability::Incomparable
    }

    pub fn swapped(self) -> Self {
        match self {
            Comparability::LeftLe => Comparability::RightLe,
            Comparability::RightLe => Comparability::LeftLe,
            other => other,
        }
    }
}

pub fn comparable(relation: &Relation, x: usize, y: usize) -> Result<Comparability> {
    let n = relation.len();
    if x >= n || y >= n {
        return Err(invalid(format!("point ({x}, {y}) out of range for {n} points")));
    }
    Ok(match (relation.holds(x, y), relation.holds(y, x)) {
        (true, true) => Comparability::Both,
        (true, false) => Comparability::LeftLe,
        (false, true) => Comparability::RightLe,
        (false, false) => Comparability::Incomparable,
    })
}

/// Total self-map `i ↦ image[i]` of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfMapTable {
    image: Vec<usize>,
}

impl SelfMapTable {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        if let Some(i) = image.iter().position(|&j| j >= n) {
            return Err(invalid(format!("image of {i} is {} outside 0..{n}", image[i])));
        }
        Ok(SelfMapTable { image })
    }

    pub fn identity(n: usize) -> Self {
        SelfMapTable { image: (0..n).collect() }
    }

    pub fn constant(n: usize, c: usize) -> Result<Self> {
        SelfMapTable::new(vec![c; n])
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }
}

/// Space, relation, map and the theorem parameters `x0`, `epsilon`, `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteInstance {
    pub space: FiniteSpace,
    pub relation: Relation,
    pub map: SelfMapTable,
    pub x0: usize,
    pub epsilon: f64,
    pub k: f64,
}

impl FiniteInstance {
    /// Checks shapes and parameter ranges. Metric and transitivity are checked
    /// separately by [`FiniteInstance::validate`] so that broken inputs can
    /// still be reported on.
    pub fn new(
        space: FiniteSpace,
        relation: Relation,
        map: SelfMapTable,
        x0: usize,
        epsilon: f64,
        k: f64,
    ) -> Result<Self> {
        let n = space.len();
        if relation.len() != n {
            return Err(invalid(format!("relation has {} points, space has {n}", relation.len())));
        }
        if map.len() != n {
            return Err(invalid(format!("map has {} entries, space has {n}", map.len())));
        }
        if x0 >= n {
            return Err(invalid(format!("x0 = {x0} out of range for {n} points")));
        }
        check_epsilon(epsilon)?;
        check_k(k)?;
        Ok(FiniteInstance { space, relation, map, x0, epsilon, k })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    #[inline]
    pub fn f(&self, i: usize) -> usize {
        self.map.apply(i)
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.space.dist(i, j)
    }

    pub fn with_x0(&self, x0: usize) -> Result<Self> {
        FiniteInstance::new(self.space.clone(), self.relation.clone(), self.map.clone(), x0, self.epsilon, self.k)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(FiniteInstance { epsilon, ..self.clone() })
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        check_k(k)?;
        Ok(FiniteInstance { k, ..self.clone() })
    }

    pub fn check_point(&self, p: usize) -> Result<()> {
        if p >= self.len() {
            return Err(invalid(format!("point {p} out of range for {} points", self.len())));
        }
        Ok(())
    }

    pub fn validate(&self) -> InstanceReport {
        InstanceReport { metric: validate_metric(&self.space), relation: validate_relation(&self.relation) }
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    Ok(())
}

pub(crate) fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        return Err(invalid(format!("k must lie in (0, 1), got {k}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceReport {
    pub metric: ValidationReport,
    pub relation: TransitivityReport,
}

impl InstanceReport {
    pub fn is_valid(&self) -> bool {
        self.metric.is_valid() && self.relation.is_transitive()
    }
}
