//! Certified Picard iteration.
//!
//! [`solve_t3`] checks the existence hypotheses (a) chain from `x0` to
//! `f(x0)`, (b) monotonicity, (c) comparability of the iterates with the
//! limit and (d) local contraction on comparable pairs, iterates, and attaches
//! the bound ledger of the constructive argument to the trace:
//!
//! * step bound `d(x_n, x_{n+1}) < m k^n ε` where `m` is the hop count of the
//!   chain from `x0` to `f(x0)`;
//! * `n0`, the smallest integer with `m k^{n0} < 1`;
//! * tail bound `d(x_{n0+n}, x_{n0+n'}) < k^n ε / (1 - k)` for all `n' > n`.
//!
//! [`solve_t5`] adds chainability of the whole instance and condition (e)
//! (every pair has a common lower or common upper bound), then iterates from
//! every requested start and compares the limits.
//!
//! Hypothesis failures never stop the iteration; they only invalidate the
//! certificate.

use serde::Serialize;

use crate::chain::{check_chainable, find_monotonic_chain, Chain};
use crate::contraction::{
    check_limit_comparability, check_local_contraction_on_comparables, check_monotonic_sequential_continuity,
    classify_monotonicity, CheckResult, Condition, Evidence, HypothesisReport,
};
use crate::error::{invalid, Error, Result};
use crate::expr::{Bounds, RealMap};
use crate::space::{check_epsilon, check_k, comparable, FiniteInstance, Norm};
use crate::TAU_ABS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iter: usize,
    /// Real backend: stop once a step is at most `atol`.
    pub atol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { max_iter: 1_000_000, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TraceStatus {
    Converged,
    CycleDetected { period: usize },
    MaxIterations,
}

/// Certified bounds for one row of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    /// `m k^n ε`, bounds `d(x_n, x_{n+1})`.
    pub step_bound: f64,
    /// Index in the shifted sequence `x_{n0 + j}`, when `n >= n0`.
    pub shifted_index: Option<usize>,
    /// `k^j ε / (1 - k)` with `j` the shifted index; bounds `d(x_n, x_{n'})`
    /// for every later `n'`.
    pub tail_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundLedger {
    pub m: usize,
    pub k: f64,
    pub epsilon: f64,
    pub n0: usize,
    pub rows: Vec<BoundRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace<P = usize> {
    pub start: P,
    /// `x_0 = start, x_1 = f(x_0), ...`, including the repeated point that
    /// ended the run.
    pub iterates: Vec<P>,
    /// `step_dists[n] = d(x_n, x_{n+1})`.
    pub step_dists: Vec<f64>,
    pub status: TraceStatus,
    pub bounds: Option<BoundLedger>,
}

impl<P: Clone> IterationTrace<P> {
    pub fn from_iterates(iterates: Vec<P>, step_dists: Vec<f64>, status: TraceStatus) -> Self {
        IterationTrace { start: iterates[0].clone(), iterates, step_dists, status, bounds: None }
    }

    pub fn terminal(&self) -> P {
        self.iterates.last().expect("trace holds the start point").clone()
    }

    /// Number of map applications.
    pub fn iterations(&self) -> usize {
        self.step_dists.len()
    }
}

impl IterationTrace<usize> {
    /// Attaches the step and tail bounds for a chain of `m` hops.
    pub fn attach_bounds(&mut self, m: usize, k: f64, epsilon: f64) -> Result<()> {
        let n0 = select_n0(m, k)?;
        let rows = (0..self.iterates.len())
            .map(|n| {
                let shifted = n.checked_sub(n0);
                Ok(BoundRow {
                    step_bound: step_bound(m, k, epsilon, n)?,
                    shifted_index: shifted,
                    tail_bound: shifted.map(|j| tail_bound(k, epsilon, j)).transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.bounds = Some(BoundLedger { m, k, epsilon, n0, rows });
        Ok(())
    }
}

fn exponent(n: usize) -> i32 {
    i32::try_from(n).unwrap_or(i32::MAX)
}

/// `m k^n ε`.
pub fn step_bound(m: usize, k: f64, epsilon: f64, n: usize) -> Result<f64> {
    if m < 1 {
        return Err(invalid("chain length m must be at least 1"));
    }
    check_k(k)?;
    check_epsilon(epsilon)?;
    Ok(m as f64 * k.powi(exponent(n)) * epsilon)
}

/// Smallest `n0 >= 0` with `m k^{n0} < 1`.
pub fn select_n0(m: usize, k: f64) -> Result<usize> {
    if m < 1 {
        return Err(invalid("chain length m must be at least 1"));
    }
    check_k(k)?;
    let mut n0 = 0;
    while m as f64 * k.powi(exponent(n0)) >= 1.0 {
        n0 += 1;
    }
    Ok(n0)
}

/// `k^n ε / (1 - k)`.
pub fn tail_bound(k: f64, epsilon: f64, n: usize) -> Result<f64> {
    check_k(k)?;
    check_epsilon(epsilon)?;
    Ok(k.powi(exponent(n)) * epsilon / (1.0 - k))
}

/// Picard iteration on a finite instance from `inst.x0`. Stops when
/// `x_{n+1} = x_n`, when a point recurs with period greater than one, or
/// after `stop.max_iter` applications.
pub fn iterate(inst: &FiniteInstance, stop: &StopRule) -> Result<IterationTrace> {
    iterate_from(inst, inst.x0, stop)
}

pub fn iterate_from(inst: &FiniteInstance, start: usize, stop: &StopRule) -> Result<IterationTrace> {
    inst.check_point(start)?;
    let mut seen = vec![usize::MAX; inst.len()];
    seen[start] = 0;
    let mut iterates = vec![start];
    let mut step_dists = Vec::new();
    let status = loop {
        if step_dists.len() >= stop.max_iter {
            break TraceStatus::MaxIterations;
        }
        let cur = *iterates.last().unwrap();
        let next = inst.f(cur);
        step_dists.push(inst.dist(cur, next));
        iterates.push(next);
        let t = iterates.len() - 1;
        if next == cur {
            break TraceStatus::Converged;
        }
        if seen[next] != usize::MAX {
            break TraceStatus::CycleDetected { period: t - seen[next] };
        }
        seen[next] = t;
    };
    Ok(IterationTrace { start, iterates, step_dists, status, bounds: None })
}

/// Real-vector instance: a map on `R^m`, a start point and the theorem
/// parameters. Completeness is assumed inside `bounds` when given.
#[derive(Debug, Clone, PartialEq)]
pub struct RealInstance {
    pub map: RealMap,
    pub x0: Vec<f64>,
    pub k: f64,
    pub epsilon: f64,
    pub bounds: Option<Bounds>,
}

impl RealInstance {
    pub fn new(map: RealMap, x0: Vec<f64>, k: f64, epsilon: f64, bounds: Option<Bounds>) -> Result<Self> {
        if x0.len() != map.dimension() {
            return Err(invalid(format!("x0 has dimension {}, map has {}", x0.len(), map.dimension())));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x0 must be finite"));
        }
        check_k(k)?;
        check_epsilon(epsilon)?;
        if let Some(b) = &bounds {
            b.check()?;
            if b.dimension() != map.dimension() {
                return Err(invalid("box dimension does not match the map"));
            }
        }
        Ok(RealInstance { map, x0, k, epsilon, bounds })
    }
}

/// Picard iteration on `R^m` with the Euclidean distance, until a step is at
/// most `stop.atol` or `stop.max_iter` applications.
pub fn iterate_real(inst: &RealInstance, stop: &StopRule) -> Result<IterationTrace<Vec<f64>>> {
    let mut iterates = vec![inst.x0.clone()];
    let mut step_dists = Vec::new();
    let status = loop {
        if step_dists.len() >= stop.max_iter {
            break TraceStatus::MaxIterations;
        }
        let cur = iterates.last().unwrap();
        let next = inst.map.eval(cur)?;
        let step = Norm::L2.distance(cur, &next);
        step_dists.push(step);
        iterates.push(next);
        if step <= stop.atol {
            break TraceStatus::Converged;
        }
    };
    Ok(IterationTrace { start: inst.x0.clone(), iterates, step_dists, status, bounds: None })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealFixedPoint {
    pub xstar: Vec<f64>,
    pub iterations: usize,
    /// `|f(x*) - x*|` re-evaluated at the returned point.
    pub residual: f64,
    pub status: TraceStatus,
    /// Converged with `residual <= atol`.
    pub accepted: bool,
}

pub fn solve_real(inst: &RealInstance, stop: &StopRule) -> Result<(RealFixedPoint, IterationTrace<Vec<f64>>)> {
    let trace = iterate_real(inst, stop)?;
    let xstar = trace.terminal();
    let residual = Norm::L2.distance(&xstar, &inst.map.eval(&xstar)?);
    let accepted = trace.status == TraceStatus::Converged && residual <= stop.atol;
    let result = RealFixedPoint { xstar, iterations: trace.iterations(), residual, status: trace.status, accepted };
    Ok((result, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Localized {
    /// `u0 = f^N(x0)`.
    pub point: usize,
    /// `N`.
    pub applications: usize,
}

/// Walks the orbit of `x0` to the first `u0 = f^N(x0)` with
/// `d(u0, f(u0)) < ε` and `u0`, `f(u0)` equal or comparable, so that the two
/// points form a two-element ε-monotonic chain.
pub fn localize_start(inst: &FiniteInstance) -> Result<Localized> {
    let mut seen = vec![false; inst.len()];
    let mut u = inst.x0;
    let mut applications = 0;
    loop {
        let fu = inst.f(u);
        if inst.dist(u, fu) < inst.epsilon && (u == fu || inst.relation.related_either(u, fu)) {
            return Ok(Localized { point: u, applications });
        }
        seen[u] = true;
        u = fu;
        applications += 1;
        if seen[u] {
            return Err(Error::NotReachable);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    FixedPoint,
    NoFixedPointReached,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub outcome: Outcome,
    pub xstar: Option<usize>,
    pub iterations: usize,
    /// `d(x*, f(x*))`, exactly 0 for a reached fixed point.
    pub residual: Option<f64>,
    pub certificate: HypothesisReport,
    /// The chain used for condition (a); its hop count sets `m`.
    pub chain: Option<Chain>,
    /// Tail bound at the last recorded iterate, when bounds are attached.
    pub tail_bound_at_stop: Option<f64>,
    /// Continuity along the orbit, the alternative to condition (c).
    pub continuity_variant: Option<CheckResult>,
    pub trace: IterationTrace,
}

/// Condition (c) evaluated after the fact. Without a limit the condition is
/// vacuous.
fn limit_condition(inst: &FiniteInstance, trace: &IterationTrace) -> Result<Condition> {
    if trace.status != TraceStatus::Converged {
        return Ok(Condition { holds: true, evidence: Evidence::NoLimit { status: trace.status } });
    }
    let lc = check_limit_comparability(&inst.relation, trace, trace.terminal())?;
    Ok(Condition { holds: lc.check.verdict, evidence: Evidence::LimitComparability(lc) })
}

pub fn solve_t3(inst: &FiniteInstance) -> Result<FixedPointResult> {
    let fx0 = inst.f(inst.x0);
    let chain = find_monotonic_chain(inst, inst.x0, fx0, inst.epsilon)?;
    let class = classify_monotonicity(&inst.relation, &inst.map);
    let contraction = check_local_contraction_on_comparables(inst);
    let mut trace = iterate(inst, &StopRule::default())?;
    let cond_c = limit_condition(inst, &trace)?;

    let certificate = HypothesisReport::new(
        3,
        vec![
            ("a", Condition { holds: chain.is_some(), evidence: Evidence::Chain { chain: chain.clone() } }),
            ("b", Condition { holds: class.is_monotonic(), evidence: Evidence::Monotonicity { class } }),
            ("c", cond_c),
            ("d", Condition { holds: contraction.verdict, evidence: Evidence::Contraction(contraction) }),
        ],
    );

    if let Some(c) = &chain {
        // A single-vertex chain (x0 already fixed) is bounded like a one-hop chain.
        trace.attach_bounds(c.hops().max(1), inst.k, inst.epsilon)?;
    }
    let tail_bound_at_stop = trace.bounds.as_ref().and_then(|b| b.rows.last()).and_then(|row| row.tail_bound);

    let converged = trace.status == TraceStatus::Converged;
    let xstar = converged.then(|| trace.terminal());
    let continuity_variant = if converged { Some(check_monotonic_sequential_continuity(inst, &trace)?) } else { None };
    Ok(FixedPointResult {
        outcome: if converged { Outcome::FixedPoint } else { Outcome::NoFixedPointReached },
        xstar,
        iterations: trace.iterations(),
        residual: xstar.map(|p| inst.dist(p, inst.f(p))),
        certificate,
        chain,
        tail_bound_at_stop,
        continuity_variant,
        trace,
    })
}

/// Localizes the start with [`localize_start`] and runs [`solve_t3`] from
/// `u0`.
pub fn solve_t3_localized(inst: &FiniteInstance) -> Result<(Localized, FixedPointResult)> {
    let loc = localize_start(inst)?;
    let shifted = inst.with_x0(loc.point)?;
    Ok((loc, solve_t3(&shifted)?))
}

/// A `z` similarly comparable to `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CommonBound {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    /// `z ≼ x` and `z ≼ y` when true, `x ≼ z` and `y ≼ z` otherwise.
    pub below: bool,
}

/// Smallest `z` with `z ≼ x, z ≼ y`, else smallest `z` with `x ≼ z, y ≼ z`.
pub fn common_bound(inst: &FiniteInstance, x: usize, y: usize) -> Option<CommonBound> {
    let n = inst.len();
    let r = &inst.relation;
    (0..n)
        .find(|&z| r.holds(z, x) && r.holds(z, y))
        .map(|z| CommonBound { x, y, z, below: true })
        .or_else(|| (0..n).find(|&z| r.holds(x, z) && r.holds(y, z)).map(|z| CommonBound { x, y, z, below: false }))
}

/// Condition (e) over all pairs `x <= y`; returns the first failing pair.
pub fn check_condition_e(inst: &FiniteInstance) -> Option<(usize, usize)> {
    let n = inst.len();
    (0..n).flat_map(|x| (x..n).map(move |y| (x, y))).find(|&(x, y)| common_bound(inst, x, y).is_none())
}

/// Hypothesis report for the existence theorem, or for the uniqueness
/// theorem which additionally requires chainability and condition (e) and
/// only asks for `x0` comparable to `f(x0)` in (a).
pub fn check_hypotheses(inst: &FiniteInstance, theorem: u8) -> Result<HypothesisReport> {
    match theorem {
        3 => Ok(solve_t3(inst)?.certificate),
        5 => theorem5_report(inst),
        other => Err(invalid(format!("unknown theorem {other}; expected 3 or 5"))),
    }
}

fn theorem5_report(inst: &FiniteInstance) -> Result<HypothesisReport> {
    let chainable = check_chainable(inst, inst.epsilon);
    let fx0 = inst.f(inst.x0);
    let relation = comparable(&inst.relation, inst.x0, fx0)?;
    let class = classify_monotonicity(&inst.relation, &inst.map);
    let trace = iterate(inst, &StopRule::default())?;
    let cond_c = limit_condition(inst, &trace)?;
    let contraction = check_local_contraction_on_comparables(inst);
    let failing = check_condition_e(inst);
    Ok(HypothesisReport::new(
        5,
        vec![
            ("chainable", Condition { holds: chainable.chainable, evidence: Evidence::Chainability(chainable) }),
            (
                "a",
                Condition {
                    holds: relation.is_comparable(),
                    evidence: Evidence::Comparability { x: inst.x0, y: fx0, relation },
                },
            ),
            ("b", Condition { holds: class.is_monotonic(), evidence: Evidence::Monotonicity { class } }),
            ("c", cond_c),
            ("d", Condition { holds: contraction.verdict, evidence: Evidence::Contraction(contraction) }),
            ("e", Condition { holds: failing.is_none(), evidence: Evidence::CommonBound { failing_pair: failing } }),
        ],
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub start: usize,
    pub status: TraceStatus,
    pub limit: Option<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CommonLimit {
    Agreed {
        point: usize,
    },
    /// Two starts whose orbits do not share a limit; `None` means the orbit
    /// cycles.
    Disagreement {
        start_a: usize,
        limit_a: Option<usize>,
        start_b: usize,
        limit_b: Option<usize>,
    },
}

/// Check of `d(f^n a, f^n b) <= k^n p ε + TAU_ABS` along a chain of `p` hops
/// joining `a` and `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationCheck {
    pub a: usize,
    pub b: usize,
    pub p: usize,
    pub steps_checked: usize,
    /// First violating `(n, distance, bound)`.
    pub violation: Option<(usize, f64, f64)>,
}

impl PropagationCheck {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessResult {
    pub certificate: HypothesisReport,
    /// Result from `x0`, whose limit every other start is compared to.
    pub reference: Option<usize>,
    pub per_start: Vec<StartOutcome>,
    pub common_limit: CommonLimit,
    /// For each start `x`, a `z` similarly comparable to `x` and `x0`.
    pub condition_e_witnesses: Vec<(usize, Option<CommonBound>)>,
    /// First pair of points without a common bound, if any.
    pub condition_e_failure: Option<(usize, usize)>,
    pub propagation: Vec<PropagationCheck>,
    pub unique: bool,
}

impl UniquenessResult {
    pub fn certified(&self) -> bool {
        self.certificate.overall
    }

    pub fn ensure_condition_e(&self) -> Result<()> {
        match self.condition_e_failure {
            Some((x, y)) => Err(Error::ConditionEFailed { x, y }),
            None => Ok(()),
        }
    }

    pub fn propagation_holds(&self) -> bool {
        self.propagation.iter().all(PropagationCheck::holds)
    }
}

fn orbit(inst: &FiniteInstance, start: usize, len: usize) -> Vec<usize> {
    std::iter::successors(Some(start), |&p| Some(inst.f(p))).take(len).collect()
}

fn propagation(inst: &FiniteInstance, a: usize, b: usize) -> Result<Option<PropagationCheck>> {
    let Some(chain) = find_monotonic_chain(inst, a, b, inst.epsilon)? else {
        return Ok(None);
    };
    let p = chain.hops();
    let len = inst.len() + 1;
    let (oa, ob) = (orbit(inst, a, len), orbit(inst, b, len));
    let violation = (0..len).find_map(|n| {
        let d = inst.dist(oa[n], ob[n]);
        let bound = inst.k.powi(exponent(n)) * p as f64 * inst.epsilon;
        (d > bound + TAU_ABS).then_some((n, d, bound))
    });
    Ok(Some(PropagationCheck { a, b, p, steps_checked: len, violation }))
}

/// Uniqueness pipeline: hypothesis report, iteration from every start, limit
/// comparison against the limit from `x0`, and the chain propagation bound
/// for each start (directly to `x0` when comparable, through the common
/// bound `z` otherwise).
pub fn solve_t5(inst: &FiniteInstance, starts: &[usize]) -> Result<UniquenessResult> {
    for &s in starts {
        inst.check_point(s)?;
    }
    let certificate = theorem5_report(inst)?;
    let stop = StopRule::default();
    let reference_trace = iterate(inst, &stop)?;
    let reference = (reference_trace.status == TraceStatus::Converged).then(|| reference_trace.terminal());

    let mut per_start = Vec::with_capacity(starts.len());
    for &s in starts {
        let t = iterate_from(inst, s, &stop)?;
        let limit = (t.status == TraceStatus::Converged).then(|| t.terminal());
        per_start.push(StartOutcome { start: s, status: t.status, limit, iterations: t.iterations() });
    }

    let common_limit = match (reference, per_start.iter().find(|o| o.limit.is_none() || o.limit != reference)) {
        (Some(point), None) => CommonLimit::Agreed { point },
        (_, Some(o)) => {
            CommonLimit::Disagreement { start_a: inst.x0, limit_a: reference, start_b: o.start, limit_b: o.limit }
        }
        (None, None) => CommonLimit::Disagreement { start_a: inst.x0, limit_a: None, start_b: inst.x0, limit_b: None },
    };

    let mut condition_e_witnesses = Vec::with_capacity(starts.len());
    let mut checks = Vec::new();
    for &s in starts {
        let z = common_bound(inst, s, inst.x0);
        condition_e_witnesses.push((s, z));
        if s == inst.x0 {
            continue;
        }
        if inst.relation.related_either(s, inst.x0) {
            checks.extend(propagation(inst, s, inst.x0)?);
        } else if let Some(cb) = z {
            checks.extend(propagation(inst, cb.z, inst.x0)?);
            checks.extend(propagation(inst, cb.z, s)?);
        }
    }

    let unique = matches!(common_limit, CommonLimit::Agreed { .. });
    Ok(UniquenessResult {
        certificate,
        reference,
        per_start,
        common_limit,
        condition_e_witnesses,
        condition_e_failure: check_condition_e(inst),
        propagation: checks,
        unique,
    })
}
