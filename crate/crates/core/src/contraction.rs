//! Monotonicity, contraction and limit-comparability checks.
//!
//! Finite checks enumerate pairs exactly and use the non-strict inequality
//! `d(f x, f y) <= k d(x, y) + TAU_ABS`. The radial check on real maps is a
//! seeded sampling refutation: a `true` verdict only means no sample violated
//! the strict inequality.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{Chain, ChainabilityReport};
use crate::error::{invalid, Error, Result};
use crate::expr::{Bounds, RealMap};
use crate::rng::SplitMix;
use crate::solver::{IterationTrace, TraceStatus};
use crate::space::{Comparability, FiniteInstance, Norm, Relation, SelfMapTable};
use crate::{TAU_ABS, TAU_REL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum MonotonicityClass {
    Preserving,
    Reversing,
    /// Every related pair is both preserved and reversed.
    Both,
    /// First related pair breaking each direction.
    Neither {
        not_preserving: (usize, usize),
        not_reversing: (usize, usize),
    },
}

impl MonotonicityClass {
    pub fn is_monotonic(self) -> bool {
        !matches!(self, MonotonicityClass::Neither { .. })
    }
}

pub fn classify_monotonicity(relation: &Relation, map: &SelfMapTable) -> MonotonicityClass {
    assert_eq!(relation.len(), map.len(), "relation and map sizes differ");
    let mut not_preserving = None;
    let mut not_reversing = None;
    for (x, y) in relation.pairs() {
        let (fx, fy) = (map.apply(x), map.apply(y));
        if not_preserving.is_none() && !relation.holds(fx, fy) {
            not_preserving = Some((x, y));
        }
        if not_reversing.is_none() && !relation.holds(fy, fx) {
            not_reversing = Some((x, y));
        }
        if not_preserving.is_some() && not_reversing.is_some() {
            break;
        }
    }
    match (not_preserving, not_reversing) {
        (None, None) => MonotonicityClass::Both,
        (None, Some(_)) => MonotonicityClass::Preserving,
        (Some(_), None) => MonotonicityClass::Reversing,
        (Some(p), Some(r)) => MonotonicityClass::Neither { not_preserving: p, not_reversing: r },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// A pair of points whose image distance exceeds the allowed bound.
    Pair { x: usize, y: usize, distance: f64, image_distance: f64, bound: f64 },
    /// Iterate `n` of a trace, at `point`, against the limit.
    Iterate { n: usize, point: usize, limit: usize },
    /// A sampled pair of real vectors.
    Sample { x: Vec<f64>, y: Vec<f64>, distance: f64, image_distance: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub verdict: bool,
    pub witness: Option<Witness>,
    pub measured_ratio: Option<f64>,
}

impl CheckResult {
    pub fn pass(measured_ratio: Option<f64>) -> Self {
        CheckResult { verdict: true, witness: None, measured_ratio }
    }

    pub fn fail(witness: Witness, measured_ratio: Option<f64>) -> Self {
        CheckResult { verdict: false, witness: Some(witness), measured_ratio }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Comparable pairs with `d(x, y) < epsilon`.
    Local,
    /// All comparable pairs.
    Global,
}

/// Comparable pairs `x < y` in row-major order that fall under `scope`.
fn eligible_pairs(inst: &FiniteInstance, scope: Scope) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = inst.len();
    (0..n).flat_map(move |x| (x + 1..n).map(move |y| (x, y))).filter(move |&(x, y)| {
        inst.relation.related_either(x, y) && (scope == Scope::Global || inst.dist(x, y) < inst.epsilon)
    })
}

fn contraction_check(inst: &FiniteInstance, scope: Scope) -> CheckResult {
    let k = inst.k;
    let mut witness = None;
    for (x, y) in eligible_pairs(inst, scope) {
        let distance = inst.dist(x, y);
        let image_distance = inst.dist(inst.f(x), inst.f(y));
        let bound = k * distance;
        if image_distance > bound + TAU_ABS {
            witness = Some(Witness::Pair { x, y, distance, image_distance, bound });
            break;
        }
    }
    let ratio = Some(tightest_constant(inst, scope));
    match witness {
        None => CheckResult::pass(ratio),
        Some(w) => CheckResult::fail(w, ratio),
    }
}

/// `d(f x, f y) <= k d(x, y)` for comparable `x, y` with `d(x, y) < epsilon`.
pub fn check_local_contraction_on_comparables(inst: &FiniteInstance) -> CheckResult {
    contraction_check(inst, Scope::Local)
}

/// `d(f x, f y) <= k d(x, y)` for all comparable `x, y`.
pub fn check_global_contraction_on_comparables(inst: &FiniteInstance) -> CheckResult {
    contraction_check(inst, Scope::Global)
}

/// Smallest admissible contraction constant over the pairs in `scope`; 0 when
/// there is no eligible pair.
pub fn tightest_constant(inst: &FiniteInstance, scope: Scope) -> f64 {
    eligible_pairs(inst, scope)
        .filter(|&(x, y)| inst.dist(x, y) > 0.0)
        .map(|(x, y)| inst.dist(inst.f(x), inst.f(y)) / inst.dist(x, y))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitComparability {
    #[serde(flatten)]
    pub check: CheckResult,
    /// For ascending traces whether `x_n ≼ x*` for every iterate, for
    /// descending traces whether `x* ≼ x_n`; `None` when the trace is not
    /// monotone in the relation.
    pub consistent_direction: Option<bool>,
}

/// Every iterate different from `xstar` must be comparable to it. Iterates
/// equal to the limit are exempt.
pub fn check_limit_comparability(
    relation: &Relation,
    trace: &IterationTrace,
    xstar: usize,
) -> Result<LimitComparability> {
    let terminal = trace.terminal();
    if terminal != xstar {
        return Err(Error::LimitMismatch { terminal, given: xstar });
    }
    let witness = trace
        .iterates
        .iter()
        .enumerate()
        .find(|&(_, &p)| p != xstar && !relation.related_either(p, xstar))
        .map(|(n, &point)| Witness::Iterate { n, point, limit: xstar });

    let moves = || trace.iterates.windows(2).filter(|w| w[0] != w[1]);
    let others = || trace.iterates.iter().filter(|&&p| p != xstar);
    let consistent_direction = if moves().all(|w| relation.holds(w[0], w[1])) {
        Some(others().all(|&p| relation.holds(p, xstar)))
    } else if moves().all(|w| relation.holds(w[1], w[0])) {
        Some(others().all(|&p| relation.holds(xstar, p)))
    } else {
        None
    };
    let check = match witness {
        None => CheckResult::pass(None),
        Some(w) => CheckResult::fail(w, None),
    };
    Ok(LimitComparability { check, consistent_direction })
}

/// On a finite space a converged trace is eventually constant, so continuity
/// along it reduces to `f(x*) = x*`.
pub fn check_monotonic_sequential_continuity(inst: &FiniteInstance, trace: &IterationTrace) -> Result<CheckResult> {
    if trace.status != TraceStatus::Converged {
        return Err(Error::NonConvergedTrace);
    }
    let xstar = trace.terminal();
    inst.check_point(xstar)?;
    let image_limit = inst.f(xstar);
    Ok(if image_limit == xstar {
        CheckResult::pass(None)
    } else {
        CheckResult::fail(Witness::Iterate { n: trace.iterates.len() - 1, point: image_limit, limit: xstar }, None)
    })
}

/// One hypothesis of a theorem with the evidence behind its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub holds: bool,
    #[serde(flatten)]
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "evidence", rename_all = "kebab-case")]
pub enum Evidence {
    Chain {
        chain: Option<Chain>,
    },
    Comparability {
        x: usize,
        y: usize,
        relation: Comparability,
    },
    Monotonicity {
        #[serde(flatten)]
        class: MonotonicityClass,
    },
    Contraction(CheckResult),
    LimitComparability(LimitComparability),
    /// The orbit has no limit, so comparability with it holds vacuously.
    NoLimit {
        status: TraceStatus,
    },
    Chainability(ChainabilityReport),
    CommonBound {
        failing_pair: Option<(usize, usize)>,
    },
}

/// Verdicts for the hypotheses of one theorem, keyed by condition name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub theorem: u8,
    pub conditions: BTreeMap<String, Condition>,
    /// Conjunction of every condition.
    pub overall: bool,
}

impl HypothesisReport {
    pub fn new(theorem: u8, conditions: Vec<(&str, Condition)>) -> Self {
        let overall = conditions.iter().all(|(_, c)| c.holds);
        let conditions = conditions.into_iter().map(|(k, c)| (k.to_string(), c)).collect();
        HypothesisReport { theorem, conditions, overall }
    }

    pub fn failed(&self) -> Vec<&str> {
        self.conditions.iter().filter(|(_, c)| !c.holds).map(|(k, _)| k.as_str()).collect()
    }
}

/// Samples pairs `(x, y)` in the box with `0 < |x - y| < radius(x)` and looks
/// for `|f x - f y| >= k |x - y|`. Ratios within `TAU_REL` of `k` are not
/// counted, since equality cannot be told apart from rounding. Sample `s` is
/// drawn from its own stream of `seed`, so results do not depend on the
/// number of worker threads.
pub fn check_local_radial_contraction(
    map: &RealMap,
    bounds: &Bounds,
    radius: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: f64,
    samples: usize,
    seed: u64,
) -> Result<CheckResult> {
    bounds.check()?;
    if bounds.dimension() != map.dimension() {
        return Err(invalid("box dimension does not match the map"));
    }
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    let m = map.dimension();
    let outcomes = (0..samples as u64)
        .into_par_iter()
        .map(|s| -> Result<Option<(f64, Option<Witness>)>> {
            let mut rng = SplitMix::stream(seed, s);
            let x = bounds.sample(&mut rng);
            let eps_x = radius(&x);
            if eps_x.is_nan() || eps_x <= 0.0 {
                return Err(invalid(format!("radius must be positive, got {eps_x}")));
            }
            let dir: Vec<f64> = (0..m).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let norm = Norm::L2.length(dir.iter().copied());
            if norm == 0.0 {
                return Ok(None);
            }
            let r = eps_x * rng.next_f64();
            let mut y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + r * d / norm).collect();
            bounds.clamp(&mut y);
            let distance = Norm::L2.distance(&x, &y);
            if distance == 0.0 || distance >= eps_x {
                return Ok(None);
            }
            let (fx, fy) = (map.eval(&x)?, map.eval(&y)?);
            let image_distance = Norm::L2.distance(&fx, &fy);
            let bound = k * distance;
            let witness = (image_distance > bound * (1.0 + TAU_REL)).then_some(Witness::Sample {
                x,
                y,
                distance,
                image_distance,
                bound,
            });
            Ok(Some((image_distance / distance, witness)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ratio: Option<f64> = None;
    let mut first = None;
    for (r, w) in outcomes.into_iter().flatten() {
        ratio = Some(ratio.map_or(r, |m| m.max(r)));
        if first.is_none() {
            first = w;
        }
    }
    Ok(match first {
        None => CheckResult::pass(ratio),
        Some(w) => CheckResult::fail(w, ratio),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{iterate, StopRule};
    use crate::space::{FiniteSpace, Norm};

    fn geo5_with(relation: Relation, k: f64) -> FiniteInstance {
        let v = [0.0, 1.0, 1.5, 1.75, 1.875];
        let space = FiniteSpace::from_coords(v.iter().map(|&x| vec![x]).collect(), Norm::L2).unwrap();
        FiniteInstance::new(space, relation, SelfMapTable::new(vec![1, 2, 3, 4, 4]).unwrap(), 0, 1.1, k).unwrap()
    }

    fn geo5(k: f64) -> FiniteInstance {
        geo5_with(Relation::total_index_order(5).unwrap(), k)
    }

    #[test]
    fn identity_is_both_on_symmetric_relations() {
        for r in [Relation::universal(4).unwrap(), Relation::empty(4).unwrap()] {
            assert_eq!(classify_monotonicity(&r, &SelfMapTable::identity(4)), MonotonicityClass::Both);
        }
        // On a total order the identity preserves but does not reverse.
        let total = Relation::total_index_order(4).unwrap();
        assert_eq!(classify_monotonicity(&total, &SelfMapTable::identity(4)), MonotonicityClass::Preserving);
    }

    #[test]
    fn geo5_map_preserves() {
        let inst = geo5(0.5);
        // Brute force over all 15 related pairs.
        let related: Vec<_> = inst.relation.pairs().collect();
        assert_eq!(related.len(), 15);
        assert!(related.iter().all(|&(x, y)| inst.relation.holds(inst.f(x), inst.f(y))));
        assert_eq!(classify_monotonicity(&inst.relation, &inst.map), MonotonicityClass::Preserving);
    }

    #[test]
    fn conflicting_pairs_are_neither() {
        let r = Relation::total_index_order(3).unwrap();
        let m = SelfMapTable::new(vec![1, 0, 2]).unwrap();
        match classify_monotonicity(&r, &m) {
            MonotonicityClass::Neither { not_preserving, not_reversing } => {
                assert_eq!(not_preserving, (0, 1));
                // (1, 2) is preserved, hence not reversed.
                assert!(!r.holds(m.apply(2), m.apply(1)));
                assert!(r.holds(not_reversing.0, not_reversing.1));
            }
            other => panic!("expected Neither, got {other:?}"),
        }
    }

    #[test]
    fn swap_reverses() {
        let r = Relation::total_index_order(2).unwrap();
        let m = SelfMapTable::new(vec![1, 0]).unwrap();
        assert_eq!(classify_monotonicity(&r, &m), MonotonicityClass::Reversing);
    }

    #[test]
    fn local_contraction_on_geo5() {
        assert!(check_local_contraction_on_comparables(&geo5(0.5)).verdict);
        let r = check_local_contraction_on_comparables(&geo5(0.4));
        assert!(!r.verdict);
        assert_eq!(r.witness, Some(Witness::Pair { x: 0, y: 1, distance: 1.0, image_distance: 0.5, bound: 0.4 }));
    }

    #[test]
    fn constant_map_always_contracts() {
        let inst = FiniteInstance { map: SelfMapTable::constant(5, 2).unwrap(), ..geo5(0.5) };
        for k in [0.01, 0.3, 0.99] {
            let inst = inst.with_k(k).unwrap();
            assert!(check_local_contraction_on_comparables(&inst).verdict);
            assert!(check_global_contraction_on_comparables(&inst).verdict);
        }
        assert_eq!(tightest_constant(&inst, Scope::Global), 0.0);
    }

    #[test]
    fn global_contraction_on_geo5() {
        assert!(check_global_contraction_on_comparables(&geo5(0.5)).verdict);
        let r = check_global_contraction_on_comparables(&geo5(0.49));
        assert!(!r.verdict);
        match r.witness {
            Some(Witness::Pair { distance, image_distance, .. }) => assert_eq!(image_distance / distance, 0.5),
            other => panic!("unexpected witness {other:?}"),
        }
        let empty = geo5_with(Relation::empty(5).unwrap(), 0.1);
        assert!(check_global_contraction_on_comparables(&empty).verdict);
    }

    #[test]
    fn tightest_constants() {
        assert_eq!(tightest_constant(&geo5(0.5), Scope::Global), 0.5);
        let id = FiniteInstance { map: SelfMapTable::identity(5), ..geo5(0.5) };
        assert_eq!(tightest_constant(&id, Scope::Global), 1.0);
    }

    #[test]
    fn limit_comparability_on_geo5() {
        let inst = geo5(0.5);
        let trace = iterate(&inst, &StopRule::default()).unwrap();
        let r = check_limit_comparability(&inst.relation, &trace, 4).unwrap();
        assert!(r.check.verdict);
        assert_eq!(r.consistent_direction, Some(true));

        let strict = Relation::strict_index_order(5).unwrap();
        let r = check_limit_comparability(&strict, &trace, 4).unwrap();
        assert!(r.check.verdict);
        assert_eq!(r.consistent_direction, Some(true));

        assert!(matches!(
            check_limit_comparability(&strict, &trace, 3),
            Err(Error::LimitMismatch { terminal: 4, given: 3 })
        ));
    }

    #[test]
    fn limit_comparability_missing_edge() {
        let relation = Relation::from_pairs(3, &[(0, 1)]).unwrap();
        let trace = IterationTrace::from_iterates(vec![0, 1, 2, 2], vec![0.0; 3], TraceStatus::Converged);
        let r = check_limit_comparability(&relation, &trace, 2).unwrap();
        assert!(!r.check.verdict);
        assert_eq!(r.check.witness, Some(Witness::Iterate { n: 0, point: 0, limit: 2 }));
    }

    #[test]
    fn sequential_continuity() {
        let inst = geo5(0.5);
        let trace = iterate(&inst, &StopRule::default()).unwrap();
        assert!(check_monotonic_sequential_continuity(&inst, &trace).unwrap().verdict);

        let swap = FiniteInstance::new(
            FiniteSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            Relation::total_index_order(2).unwrap(),
            SelfMapTable::new(vec![1, 0]).unwrap(),
            0,
            2.0,
            0.5,
        )
        .unwrap();
        let cyc = iterate(&swap, &StopRule::default()).unwrap();
        assert!(matches!(check_monotonic_sequential_continuity(&swap, &cyc), Err(Error::NonConvergedTrace)));

        let constant = FiniteInstance { map: SelfMapTable::constant(5, 3).unwrap(), ..geo5(0.5) };
        let t = iterate(&constant, &StopRule::default()).unwrap();
        assert_eq!(t.iterates, vec![0, 3, 3]);
        assert!(check_monotonic_sequential_continuity(&constant, &t).unwrap().verdict);
    }

    #[test]
    fn radial_halving_has_no_violation() {
        let map = RealMap::parse(&["x1/2", "x2/2"]).unwrap();
        let b = Bounds::cube(2, 0.0, 1.0).unwrap();
        let r = check_local_radial_contraction(&map, &b, &|_| 1.0, 0.5, 1000, 11).unwrap();
        assert!(r.verdict, "{r:?}");
    }

    #[test]
    fn radial_identity_and_scaling_violate() {
        let b = Bounds::cube(1, 0.0, 1.0).unwrap();
        let id = RealMap::parse(&["x1"]).unwrap();
        assert!(!check_local_radial_contraction(&id, &b, &|_| 0.5, 0.9, 100, 1).unwrap().verdict);
        let scaled = RealMap::parse(&["0.6*x1"]).unwrap();
        let r = check_local_radial_contraction(&scaled, &b, &|_| 0.5, 0.5, 100, 1).unwrap();
        assert!(!r.verdict);
        assert!((r.measured_ratio.unwrap() - 0.6).abs() < 1e-9);
    }

    #[test]
    fn radial_eval_error_propagates() {
        let b = Bounds::cube(1, -1.0, 1.0).unwrap();
        let m = RealMap::parse(&["sqrt(x1)"]).unwrap();
        assert!(matches!(check_local_radial_contraction(&m, &b, &|_| 0.1, 0.5, 200, 2), Err(Error::MapEval(_))));
    }
}
