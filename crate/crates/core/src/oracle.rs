//! Brute-force ground truth, seeded instance generation and
//! hypothesis-ablation mining.
//!
//! The oracle side never calls the solver's iteration code: fixed points
//! are found by scanning the map table and orbits are followed with their
//! own first-visit table.
//!
//! The generator draws everything from [`SplitMix`] seeded with the
//! instance seed. For monotone maps with an embedding metric it builds the
//! map first and then the point positions, so that every pair contracts by
//! at least `target_k`:
//!
//! * the map is index-nondecreasing with a single fixed point `p`, points
//!   below `p` move up and points above move down;
//! * the gap between points `t` and `t + 1` maps onto the gaps
//!   `f(t)..f(t + 1)`; gaps are assigned so that each is at least `1/k` times
//!   the sum of the gaps it maps onto, which is possible because the "maps
//!   onto" graph points toward `p` and has no cycle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::HypothesisReport;
use crate::error::{invalid, Result};
use crate::io::FiniteSpec;
use crate::rng::{mix, SplitMix};
use crate::solver::{iterate_from, solve_t3, solve_t5, CommonLimit, StopRule, TraceStatus};
use crate::space::{
    transitive_closure, validate_relation, FiniteInstance, FiniteSpace, Norm, Relation, RelationKind, SelfMapTable,
};

/// Points `i` with `f(i) = i`, increasing.
pub fn enumerate_fixed_points(map: &SelfMapTable) -> Vec<usize> {
    map.image().iter().enumerate().filter(|&(i, &j)| i == j).map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Settle {
    ConvergedTo { point: usize },
    Cycle { period: usize },
}

/// Follows the orbit of `x0` until a point repeats, at most `n + 1`
/// applications on `n` points.
pub fn orbit_settles(map: &SelfMapTable, x0: usize) -> Settle {
    let mut first_visit: Vec<Option<usize>> = vec![None; map.len()];
    let mut x = x0;
    let mut t = 0usize;
    loop {
        if let Some(s) = first_visit[x] {
            let period = t - s;
            return if period == 1 { Settle::ConvergedTo { point: x } } else { Settle::Cycle { period } };
        }
        first_visit[x] = Some(t);
        x = map.apply(x);
        t += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleVerdict {
    pub fixed_points: Vec<usize>,
    /// Indexed by start point.
    pub per_start: Vec<Settle>,
    pub agrees_with_solver: bool,
    /// Human-readable description of every mismatch found.
    pub disagreements: Vec<String>,
    pub hypothesis_report: HypothesisReport,
    pub existence_certified: bool,
}

/// Compares the solver with the brute-force answers: per-start limits and
/// periods, the existence result from `x0`, the uniqueness verdict over all
/// starts, and the conclusions of both theorems whenever their hypotheses
/// are certified.
pub fn brute_force_check(inst: &FiniteInstance) -> Result<OracleVerdict> {
    let n = inst.len();
    let fixed_points = enumerate_fixed_points(&inst.map);
    let per_start: Vec<Settle> = (0..n).map(|s| orbit_settles(&inst.map, s)).collect();
    let mut disagreements = Vec::new();

    let stop = StopRule::default();
    for (s, settle) in per_start.iter().enumerate() {
        let trace = iterate_from(inst, s, &stop)?;
        let solver = match trace.status {
            TraceStatus::Converged => Some(Settle::ConvergedTo { point: trace.terminal() }),
            TraceStatus::CycleDetected { period } => Some(Settle::Cycle { period }),
            TraceStatus::MaxIterations => None,
        };
        if solver != Some(*settle) {
            disagreements.push(format!("start {s}: solver {solver:?}, oracle {settle:?}"));
        }
    }

    let t3 = solve_t3(inst)?;
    let from_x0 = per_start[inst.x0];
    let oracle_limit = match from_x0 {
        Settle::ConvergedTo { point } => Some(point),
        Settle::Cycle { .. } => None,
    };
    if t3.xstar != oracle_limit {
        disagreements.push(format!("existence: solver limit {:?}, oracle {:?}", t3.xstar, oracle_limit));
    }
    if let Some(p) = t3.xstar {
        if !fixed_points.contains(&p) {
            disagreements.push(format!("existence: solver limit {p} is not a fixed point"));
        }
    }
    let existence_certified = t3.certificate.overall && validate_relation(&inst.relation).is_transitive();
    if existence_certified && oracle_limit.is_none() {
        disagreements.push("existence certified but the orbit of x0 cycles".into());
    }

    let starts: Vec<usize> = (0..n).collect();
    let t5 = solve_t5(inst, &starts)?;
    let limits: Vec<Option<usize>> = per_start
        .iter()
        .map(|s| match s {
            Settle::ConvergedTo { point } => Some(*point),
            Settle::Cycle { .. } => None,
        })
        .collect();
    let oracle_unique = limits.iter().all(|l| l.is_some() && *l == limits[0]);
    if t5.unique != oracle_unique {
        disagreements.push(format!("uniqueness: solver {}, oracle {oracle_unique}", t5.unique));
    }
    if let CommonLimit::Agreed { point } = t5.common_limit {
        if !fixed_points.contains(&point) {
            disagreements.push(format!("uniqueness: common limit {point} is not a fixed point"));
        }
    }
    let hypothesis_report = t5.certificate.clone();
    if hypothesis_report.overall && validate_relation(&inst.relation).is_transitive() {
        if !oracle_unique {
            disagreements.push("uniqueness certified but starts settle differently".into());
        }
        if fixed_points.len() != 1 {
            disagreements.push(format!("uniqueness certified but fixed points are {fixed_points:?}"));
        }
        if !t5.propagation_holds() {
            disagreements.push("uniqueness certified but a propagation bound failed".into());
        }
    }

    Ok(OracleVerdict {
        fixed_points,
        per_start,
        agrees_with_solver: disagreements.is_empty(),
        disagreements,
        hypothesis_report,
        existence_certified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricMode {
    #[serde(rename = "embedding-1d")]
    Embedding1d,
    /// Monotone staircase in the plane under the L1 norm.
    #[serde(rename = "embedding-2d")]
    Embedding2d,
    /// Symmetric table with off-diagonal entries in `[1, 2]`.
    #[serde(rename = "random-explicit")]
    RandomExplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapMode {
    MonotoneRandom,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationMode {
    /// Random pairs `i <= j` kept with probability `relation_density`.
    IndexDag,
    /// Two index blocks with no relation between them and one fixed point
    /// each.
    Components,
    Universal,
    /// Random pairs in both directions, not closed; used to drop
    /// transitivity.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub seed: u64,
    pub n: usize,
    pub relation_density: f64,
    pub metric_mode: MetricMode,
    pub target_k: f64,
    pub map_mode: MapMode,
    pub relation_mode: RelationMode,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            seed: 0,
            n: 8,
            relation_density: 1.0,
            metric_mode: MetricMode::Embedding1d,
            target_k: 0.5,
            map_mode: MapMode::MonotoneRandom,
            relation_mode: RelationMode::IndexDag,
        }
    }
}

const PARAMS_SALT: u64 = 0x5DEE_CE66_D1CE_4E5B;

impl GeneratorParams {
    pub fn check(&self) -> Result<()> {
        if !(1..=crate::space::MAX_POINTS).contains(&self.n) {
            return Err(invalid(format!("n must be in 1..={}, got {}", crate::space::MAX_POINTS, self.n)));
        }
        if !(0.0..=1.0).contains(&self.relation_density) {
            return Err(invalid("relation density must lie in [0, 1]"));
        }
        crate::space::check_k(self.target_k)?;
        if self.relation_mode == RelationMode::Components && self.n < 2 {
            return Err(invalid("component mode needs at least 2 points"));
        }
        Ok(())
    }

    /// Parameters drawn from `seed` for test suites: `n` in `2..=max_n`,
    /// mostly monotone maps on embeddings with dense index relations.
    pub fn sampled(seed: u64, max_n: usize) -> Self {
        let mut rng = SplitMix::new(mix(seed ^ PARAMS_SALT));
        let n = rng.range_inclusive(2, max_n.max(2));
        let relation_density = if rng.chance(0.5) { 1.0 } else { rng.uniform(0.5, 1.0) };
        let metric_mode = match rng.below(20) {
            0..=8 => MetricMode::Embedding1d,
            9..=17 => MetricMode::Embedding2d,
            _ => MetricMode::RandomExplicit,
        };
        let map_mode = if rng.chance(0.9) { MapMode::MonotoneRandom } else { MapMode::Unconstrained };
        let relation_mode = match rng.below(10) {
            0..=7 => RelationMode::IndexDag,
            8 => RelationMode::Universal,
            _ => RelationMode::Components,
        };
        let target_k = rng.uniform(0.3, 0.9);
        GeneratorParams { seed, n, relation_density, metric_mode, target_k, map_mode, relation_mode }
    }
}

/// Index-nondecreasing map on `lo..hi` with the single fixed point returned.
fn monotone_block(rng: &mut SplitMix, image: &mut [usize], lo: usize, hi: usize) -> usize {
    let p = lo + rng.below((hi - lo) as u64) as usize;
    for i in lo..p {
        let floor = if i == lo { i + 1 } else { (i + 1).max(image[i - 1]) };
        image[i] = rng.range_inclusive(floor, p);
    }
    image[p] = p;
    for i in p + 1..hi {
        image[i] = rng.range_inclusive(image[i - 1].max(p), i - 1);
    }
    p
}

/// Gaps `lo..hi-1` of a block with fixed point `p`: gap `t` is a base draw
/// plus `1/k` times the gaps `f(t)..f(t+1)` it maps onto.
fn block_gaps(rng: &mut SplitMix, image: &[usize], gaps: &mut [f64], lo: usize, hi: usize, p: usize, k: f64) {
    let set = |t: usize, gaps: &mut [f64], rng: &mut SplitMix| {
        let children: f64 = gaps[image[t]..image[t + 1]].iter().fold(0.0, |acc, g| acc + g);
        gaps[t] = rng.uniform(0.5, 1.5) + children / k;
    };
    // Below p the children lie to the right, above p to the left.
    for t in (lo..p).rev() {
        set(t, gaps, rng);
    }
    for t in p..hi.saturating_sub(1) {
        set(t, gaps, rng);
    }
}

fn close_under_map(mut rel: Relation, map: &SelfMapTable) -> Result<Relation> {
    let n = rel.len();
    loop {
        rel = transitive_closure(&rel);
        let mut table = rel.table().to_vec();
        let mut added = false;
        for (i, j) in rel.pairs() {
            let cell = map.apply(i) * n + map.apply(j);
            if !table[cell] {
                table[cell] = true;
                added = true;
            }
        }
        if !added {
            return Ok(rel);
        }
        rel = Relation::from_table(n, table, RelationKind::ExplicitEdges)?;
    }
}

fn tag_total_order(rel: Relation) -> Result<Relation> {
    let n = rel.len();
    let total = Relation::total_index_order(n)?;
    if rel.table() == total.table() {
        Ok(total)
    } else {
        Ok(rel)
    }
}

/// Deterministic instance for `params`; every relation except the raw mode
/// is transitively closed, and monotone maps also leave it invariant.
pub fn random_instance(params: &GeneratorParams) -> Result<FiniteInstance> {
    params.check()?;
    let n = params.n;
    let k = params.target_k;
    let mut rng = SplitMix::new(params.seed);

    let split = match params.relation_mode {
        RelationMode::Components => rng.range_inclusive(1, n - 1),
        _ => n,
    };
    let blocks: Vec<(usize, usize)> = if split < n { vec![(0, split), (split, n)] } else { vec![(0, n)] };

    let mut image = vec![0; n];
    let mut fixed = Vec::new();
    match params.map_mode {
        MapMode::MonotoneRandom => {
            for &(lo, hi) in &blocks {
                fixed.push(monotone_block(&mut rng, &mut image, lo, hi));
            }
        }
        MapMode::Unconstrained => {
            for v in image.iter_mut() {
                *v = rng.below(n as u64) as usize;
            }
        }
    }
    let map = SelfMapTable::new(image)?;

    let mut gaps = vec![0.0; n.saturating_sub(1)];
    if params.map_mode == MapMode::MonotoneRandom {
        for (&(lo, hi), &p) in blocks.iter().zip(&fixed) {
            block_gaps(&mut rng, map.image(), &mut gaps, lo, hi, p, k);
        }
        if split < n {
            gaps[split - 1] = rng.uniform(0.5, 1.5);
        }
    } else {
        for g in gaps.iter_mut() {
            *g = rng.uniform(0.5, 1.5);
        }
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);

    let (space, scale) = match params.metric_mode {
        MetricMode::Embedding1d => {
            let coords = positions(&gaps).into_iter().map(|x| vec![x]).collect();
            (FiniteSpace::from_coords(coords, Norm::L2)?, max_gap)
        }
        MetricMode::Embedding2d => {
            // Each gap is split between the two axes; both coordinates are
            // nondecreasing, so L1 distances equal the 1-D ones.
            let mut xy = vec![vec![0.0, 0.0]];
            for &g in &gaps {
                let share = rng.next_f64();
                let last = xy.last().unwrap();
                xy.push(vec![last[0] + share * g, last[1] + (1.0 - share) * g]);
            }
            (FiniteSpace::from_coords(xy, Norm::L1)?, max_gap)
        }
        MetricMode::RandomExplicit => {
            let mut m = vec![vec![0.0; n]; n];
            #[allow(clippy::needless_range_loop)]
            for i in 0..n {
                for j in i + 1..n {
                    let d = rng.uniform(1.0, 2.0);
                    m[i][j] = d;
                    m[j][i] = d;
                }
            }
            (FiniteSpace::from_matrix(m)?, 2.0)
        }
    };
    let epsilon = scale.max(f64::MIN_POSITIVE) * rng.uniform(0.8, 1.5);

    let density = params.relation_density;
    let same_block = |i: usize, j: usize| (i < split) == (j < split);
    let relation = match params.relation_mode {
        RelationMode::Universal => Relation::universal(n)?,
        RelationMode::Raw => {
            let table = (0..n * n).map(|_| rng.chance(density)).collect();
            Relation::from_table(n, table, RelationKind::ExplicitEdges)?
        }
        RelationMode::IndexDag | RelationMode::Components => {
            let table = (0..n * n)
                .map(|c| {
                    let (i, j) = (c / n, c % n);
                    i <= j && same_block(i, j) && rng.chance(density)
                })
                .collect();
            let rel = Relation::from_table(n, table, RelationKind::ExplicitEdges)?;
            let rel = match params.map_mode {
                MapMode::MonotoneRandom => close_under_map(rel, &map)?,
                MapMode::Unconstrained => transitive_closure(&rel),
            };
            tag_total_order(rel)?
        }
    };
    let x0 = rng.below(n as u64) as usize;
    FiniteInstance::new(space, relation, map, x0, epsilon, k)
}

fn positions(gaps: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(gaps.iter().scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        }))
        .collect()
}

/// Hypothesis left out of a mining run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drop {
    /// Control: keep every hypothesis; any hit is a bug.
    None,
    Transitivity,
    MonotonicityB,
    LimitComparabilityC,
    ContractionD,
    ConditionE,
}

impl Drop {
    pub const ALL: [Drop; 6] = [
        Drop::None,
        Drop::Transitivity,
        Drop::MonotonicityB,
        Drop::LimitComparabilityC,
        Drop::ContractionD,
        Drop::ConditionE,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Drop::None => "none",
            Drop::Transitivity => "transitivity",
            Drop::MonotonicityB => "monotonicity-b",
            Drop::LimitComparabilityC => "limit-comparability-c",
            Drop::ContractionD => "contraction-d",
            Drop::ConditionE => "condition-e",
        }
    }

    pub fn parse(s: &str) -> Option<Drop> {
        Drop::ALL.into_iter().find(|d| d.name() == s)
    }

    fn condition(self) -> Option<&'static str> {
        match self {
            Drop::MonotonicityB => Some("b"),
            Drop::LimitComparabilityC => Some("c"),
            Drop::ContractionD => Some("d"),
            Drop::ConditionE => Some("e"),
            Drop::None | Drop::Transitivity => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub seed: u64,
    pub params: GeneratorParams,
    /// What failed in the conclusion.
    pub conclusion: String,
    pub certificate: HypothesisReport,
    pub fixed_points: Vec<usize>,
    pub per_start: Vec<Settle>,
    pub instance: FiniteSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MiningOutcome {
    Found(Box<Hit>),
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiningReport {
    pub drop: Drop,
    pub first_seed: u64,
    pub budget: u64,
    #[serde(flatten)]
    pub outcome: MiningOutcome,
}

impl MiningReport {
    pub fn hit(&self) -> Option<&Hit> {
        match &self.outcome {
            MiningOutcome::Found(h) => Some(h),
            MiningOutcome::Exhausted => None,
        }
    }
}

/// Generator settings for seed `seed` of a run dropping `drop`.
pub fn mining_params(base: &GeneratorParams, drop: Drop, seed: u64) -> GeneratorParams {
    if drop == Drop::None {
        return GeneratorParams::sampled(seed, base.n);
    }
    let mut rng = SplitMix::new(mix(seed ^ PARAMS_SALT));
    let n = rng.range_inclusive(2, base.n.max(2));
    let mut p = GeneratorParams { seed, n, ..*base };
    match drop {
        Drop::Transitivity => {
            p.relation_mode = RelationMode::Raw;
            p.map_mode = MapMode::MonotoneRandom;
        }
        Drop::MonotonicityB | Drop::LimitComparabilityC | Drop::ContractionD => {
            // Dense relations turn (d) into a global contraction, which
            // leaves no room for a cycle; vary the density per seed.
            p.map_mode = MapMode::Unconstrained;
            p.relation_density = rng.uniform(0.0, 1.0);
        }
        Drop::ConditionE => {
            p.relation_mode = RelationMode::Components;
            p.map_mode = MapMode::MonotoneRandom;
        }
        Drop::None => unreachable!(),
    }
    p
}

fn settle_all(map: &SelfMapTable) -> Vec<Settle> {
    (0..map.len()).map(|s| orbit_settles(map, s)).collect()
}

/// Checks one instance against a drop: all other hypotheses hold, the
/// dropped one fails, and the conclusion fails.
fn examine(inst: &FiniteInstance, drop: Drop) -> Result<Option<(String, HypothesisReport)>> {
    let transitive = validate_relation(&inst.relation).is_transitive();
    let others_hold = |report: &HypothesisReport, dropped: Option<&str>| {
        report.conditions.iter().all(|(name, c)| c.holds || Some(name.as_str()) == dropped)
            && dropped.is_none_or(|d| !report.conditions[d].holds)
    };
    match drop {
        Drop::None => {
            if !transitive {
                return Ok(None);
            }
            let t3 = solve_t3(inst)?;
            if t3.certificate.overall && t3.xstar.is_none() {
                return Ok(Some(("existence certified but no limit".into(), t3.certificate)));
            }
            let starts: Vec<usize> = (0..inst.len()).collect();
            let t5 = solve_t5(inst, &starts)?;
            if t5.certified() && !t5.unique {
                return Ok(Some(("uniqueness certified but limits differ".into(), t5.certificate)));
            }
            Ok(None)
        }
        Drop::ConditionE => {
            if !transitive {
                return Ok(None);
            }
            let starts: Vec<usize> = (0..inst.len()).collect();
            let t5 = solve_t5(inst, &starts)?;
            let report = t5.certificate.clone();
            Ok((others_hold(&report, Some("e")) && !t5.unique).then(|| (format!("{:?}", t5.common_limit), report)))
        }
        Drop::Transitivity => {
            if transitive {
                return Ok(None);
            }
            let t3 = solve_t3(inst)?;
            Ok((t3.certificate.overall && t3.xstar.is_none())
                .then(|| ("orbit of x0 never settles".into(), t3.certificate)))
        }
        _ => {
            if !transitive {
                return Ok(None);
            }
            let t3 = solve_t3(inst)?;
            Ok((others_hold(&t3.certificate, drop.condition()) && t3.xstar.is_none())
                .then(|| (format!("orbit of x0: {:?}", t3.trace.status), t3.certificate)))
        }
    }
}

/// Tries seeds `params.seed, params.seed + 1, ...` (`budget` of them) and
/// reports the smallest hitting seed. Seeds are examined in parallel; the
/// result does not depend on scheduling.
pub fn counterexample_mine(params: &GeneratorParams, drop: Drop, budget: u64) -> Result<MiningReport> {
    params.check()?;
    let found = (0..budget)
        .into_par_iter()
        .map(|i| -> Result<Option<Hit>> {
            let seed = params.seed.wrapping_add(i);
            let p = mining_params(params, drop, seed);
            let inst = random_instance(&p)?;
            Ok(examine(&inst, drop)?.map(|(conclusion, certificate)| Hit {
                seed,
                params: p,
                conclusion,
                certificate,
                fixed_points: enumerate_fixed_points(&inst.map),
                per_start: settle_all(&inst.map),
                instance: FiniteSpec::from_instance(&inst),
            }))
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        })
        .transpose()?
        .flatten();
    let outcome = match found {
        Some(hit) => MiningOutcome::Found(Box::new(hit)),
        None => MiningOutcome::Exhausted,
    };
    Ok(MiningReport { drop, first_seed: params.seed, budget, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::{classify_monotonicity, MonotonicityClass};
    use crate::space::validate_metric;

    fn geo5() -> FiniteInstance {
        let v = [0.0, 1.0, 1.5, 1.75, 1.875];
        FiniteInstance::new(
            FiniteSpace::from_coords(v.iter().map(|&x| vec![x]).collect(), Norm::L2).unwrap(),
            Relation::total_index_order(5).unwrap(),
            SelfMapTable::new(vec![1, 2, 3, 4, 4]).unwrap(),
            0,
            1.1,
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn fixed_points() {
        assert_eq!(enumerate_fixed_points(&SelfMapTable::identity(4)), vec![0, 1, 2, 3]);
        assert_eq!(enumerate_fixed_points(&SelfMapTable::new(vec![1, 2, 3, 4, 4]).unwrap()), vec![4]);
        assert!(enumerate_fixed_points(&SelfMapTable::new(vec![1, 0]).unwrap()).is_empty());
    }

    #[test]
    fn settles() {
        assert_eq!(
            orbit_settles(&SelfMapTable::new(vec![1, 2, 3, 4, 4]).unwrap(), 0),
            Settle::ConvergedTo { point: 4 }
        );
        assert_eq!(orbit_settles(&SelfMapTable::new(vec![1, 0]).unwrap(), 0), Settle::Cycle { period: 2 });
        assert_eq!(orbit_settles(&SelfMapTable::constant(5, 3).unwrap(), 0), Settle::ConvergedTo { point: 3 });
    }

    #[test]
    fn geo5_verdict() {
        let v = brute_force_check(&geo5()).unwrap();
        assert!(v.agrees_with_solver, "{:?}", v.disagreements);
        assert_eq!(v.fixed_points, vec![4]);
        assert!(v.hypothesis_report.overall);
    }

    #[test]
    fn swap_verdict() {
        let inst = FiniteInstance::new(
            FiniteSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
            Relation::total_index_order(2).unwrap(),
            SelfMapTable::new(vec![1, 0]).unwrap(),
            0,
            2.0,
            0.5,
        )
        .unwrap();
        let v = brute_force_check(&inst).unwrap();
        assert!(v.agrees_with_solver, "{:?}", v.disagreements);
        assert_eq!(v.per_start[0], Settle::Cycle { period: 2 });
        assert!(!v.existence_certified);
    }

    #[test]
    fn generator_is_deterministic() {
        let p = GeneratorParams { seed: 42, n: 6, ..Default::default() };
        assert_eq!(random_instance(&p).unwrap(), random_instance(&p).unwrap());
        let q = GeneratorParams { seed: 43, ..p };
        assert_ne!(random_instance(&p).unwrap(), random_instance(&q).unwrap());
    }

    #[test]
    fn density_extremes() {
        let p = GeneratorParams { seed: 7, n: 6, relation_density: 0.0, ..Default::default() };
        assert!(random_instance(&p).unwrap().relation.is_empty());
        let p = GeneratorParams { relation_density: 1.0, ..p };
        let inst = random_instance(&p).unwrap();
        assert_eq!(inst.relation.kind(), RelationKind::TotalIndexOrder);
    }

    #[test]
    fn generated_instances_are_valid_and_monotone() {
        for seed in 0..300 {
            let p = GeneratorParams::sampled(seed, 12);
            let inst = random_instance(&p).unwrap();
            assert!(validate_metric(&inst.space).is_valid(), "seed {seed}");
            assert!(validate_relation(&inst.relation).is_transitive(), "seed {seed}");
            if p.map_mode == MapMode::MonotoneRandom {
                let class = classify_monotonicity(&inst.relation, &inst.map);
                assert!(matches!(class, MonotonicityClass::Preserving | MonotonicityClass::Both), "seed {seed}");
            }
        }
    }

    #[test]
    fn monotone_embeddings_contract_globally() {
        for seed in 0..200 {
            for metric_mode in [MetricMode::Embedding1d, MetricMode::Embedding2d] {
                let p = GeneratorParams { seed, n: 10, metric_mode, target_k: 0.6, ..Default::default() };
                let inst = random_instance(&p).unwrap();
                for x in 0..inst.len() {
                    for y in 0..inst.len() {
                        let lhs = inst.dist(inst.f(x), inst.f(y));
                        assert!(lhs <= 0.6 * inst.dist(x, y) + 1e-9, "seed {seed} pair ({x}, {y})");
                    }
                }
            }
        }
    }

    #[test]
    fn drop_names_round_trip() {
        for d in Drop::ALL {
            assert_eq!(Drop::parse(d.name()), Some(d));
        }
        assert_eq!(Drop::parse("bogus"), None);
    }

    #[test]
    fn contraction_drop_finds_a_cycle() {
        let base = GeneratorParams { n: 4, ..Default::default() };
        let r = counterexample_mine(&base, Drop::ContractionD, 2000).unwrap();
        let hit = r.hit().expect("hit");
        assert!(hit.per_start.iter().any(|s| matches!(s, Settle::Cycle { .. })));
        assert!(!hit.certificate.conditions["d"].holds);
    }
}
