//! Acceptance criteria 1-10, run in order. Each criterion prints one
//! `PASS` or `FAIL` line; the test fails if any criterion fails.
//!
//! Pinned tolerances: trace bounds 1e-12 absolute, path inequalities 1e-9
//! absolute, parser evaluation 1e-12 absolute. Runtime limits: GEO5 solve
//! 10 ms, step-bound suite 10 s, mining 60 s.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use relfix::expr::{parse_expr, ExprError, RealMap};
use relfix::io::load_finite;
use relfix::oracle::{brute_force_check, counterexample_mine, random_instance, Drop, GeneratorParams};
use relfix::paths::{build_orbit_instance, check_prop6, image_polyline, polyline_length, Polyline};
use relfix::rng::SplitMix;
use relfix::solver::{check_hypotheses, select_n0, solve_t3, solve_t5, step_bound, tail_bound, FixedPointResult};
use relfix::space::{validate_metric, validate_relation, FiniteInstance};

const BOUND_TOL: f64 = 1e-12;
const PATH_TOL: f64 = 1e-9;
const EVAL_TOL: f64 = 1e-12;
const SUITE_SIZE: usize = 1000;
const UNIQUENESS_SUITE_SIZE: usize = 200;
const MAX_N: usize = 12;
const SEED_CAP: u64 = 200_000;
const MINING_BUDGET: u64 = 10_000;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { ok: false, detail: detail.into() }
}

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond {
        pass(ok)
    } else {
        fail(bad)
    }
}

/// Seeded instances with an all-true existence certificate, in seed order.
struct Suite {
    certified: Vec<(FiniteInstance, FixedPointResult)>,
    all: Vec<FiniteInstance>,
    elapsed: Duration,
}

fn existence_suite() -> Suite {
    let start = Instant::now();
    let mut certified = Vec::new();
    let mut all = Vec::new();
    for seed in 0..SEED_CAP {
        if certified.len() == SUITE_SIZE {
            break;
        }
        let inst = random_instance(&GeneratorParams::sampled(seed, MAX_N)).expect("generator");
        let r = solve_t3(&inst).expect("solve");
        if r.certificate.overall && validate_relation(&inst.relation).is_transitive() {
            certified.push((inst.clone(), r));
        }
        all.push(inst);
    }
    Suite { certified, all, elapsed: start.elapsed() }
}

fn criterion_1() -> Outcome {
    let inst = load_finite(fixture("geo5.json")).expect("fixture");
    let start = Instant::now();
    let r = solve_t3(&inst).expect("solve");
    let elapsed = start.elapsed();
    let m = r.chain.as_ref().map(|c| c.vertices.len() - 1);
    let ok = r.xstar == Some(4)
        && r.iterations == 5
        && r.residual == Some(0.0)
        && r.certificate.overall
        && ["a", "b", "c", "d"].iter().all(|c| r.certificate.conditions[*c].holds)
        && m == Some(1)
        && elapsed < Duration::from_millis(10);
    check(
        ok,
        format!("x* = 4 after 5 iterations, residual 0, m = 1, {elapsed:?}"),
        format!("x* {:?}, iterations {}, residual {:?}, m {m:?}, {elapsed:?}", r.xstar, r.iterations, r.residual),
    )
}

fn criterion_2(suite: &Suite) -> Outcome {
    let mut violations = 0;
    let mut steps = 0;
    for (inst, r) in &suite.certified {
        let chain = r.chain.as_ref().expect("certified chain");
        assert!(chain.verify(inst));
        let m = (chain.vertices.len() - 1).max(1) as f64;
        for (n, &d) in r.trace.step_dists.iter().enumerate() {
            steps += 1;
            if d > m * inst.k.powi(n as i32) * inst.epsilon + BOUND_TOL {
                violations += 1;
            }
        }
    }
    let ok = suite.certified.len() >= SUITE_SIZE && violations == 0 && suite.elapsed < Duration::from_secs(10);
    check(
        ok,
        format!("{} instances, {steps} steps, 0 violations, {:?}", suite.certified.len(), suite.elapsed),
        format!("{} instances, {violations} violations, {:?}", suite.certified.len(), suite.elapsed),
    )
}

fn criterion_3(suite: &Suite) -> Outcome {
    let mut violations = 0;
    let mut pairs = 0;
    for (inst, r) in &suite.certified {
        let m = (r.chain.as_ref().unwrap().vertices.len() - 1).max(1);
        let k = inst.k;
        // Independent n0: smallest n with m k^n < 1.
        let mut n0 = 0;
        while m as f64 * k.powi(n0 as i32) >= 1.0 {
            n0 += 1;
        }
        if select_n0(m, k).unwrap() != n0 {
            violations += 1;
        }
        let xs = &r.trace.iterates;
        for n in 0..xs.len().saturating_sub(n0) {
            for n2 in n + 1..xs.len() - n0 {
                pairs += 1;
                let d = inst.dist(xs[n0 + n], xs[n0 + n2]);
                if d >= k.powi(n as i32) * inst.epsilon / (1.0 - k) + BOUND_TOL {
                    violations += 1;
                }
            }
        }
    }
    check(
        violations == 0 && !suite.certified.is_empty(),
        format!("{pairs} re-indexed pairs, 0 violations"),
        format!("{violations} violations"),
    )
}

fn criterion_4(suite: &Suite) -> Outcome {
    let mut disagreements = Vec::new();
    for inst in &suite.all {
        let v = brute_force_check(inst).expect("oracle");
        if !v.agrees_with_solver {
            disagreements.push(v.disagreements);
        }
    }
    check(
        disagreements.is_empty(),
        format!("{} instances, 0 disagreements", suite.all.len()),
        format!("{} disagreements, first {:?}", disagreements.len(), disagreements.first()),
    )
}

fn criterion_5() -> Outcome {
    let mut count = 0;
    let mut failures = Vec::new();
    let mut chains = 0;
    for seed in 0..SEED_CAP {
        if count == UNIQUENESS_SUITE_SIZE {
            break;
        }
        let inst = random_instance(&GeneratorParams::sampled(seed, MAX_N)).unwrap();
        let report = check_hypotheses(&inst, 5).unwrap();
        if !report.overall || !validate_relation(&inst.relation).is_transitive() {
            continue;
        }
        count += 1;
        let starts: Vec<usize> = (0..inst.len()).collect();
        let u = solve_t5(&inst, &starts).unwrap();
        if !u.unique || u.per_start.iter().any(|s| s.limit.is_none() || s.limit != u.reference) {
            failures.push(format!("seed {seed}: limits differ"));
        }
        for c in &u.propagation {
            chains += 1;
            let (mut a, mut b) = (c.a, c.b);
            for n in 0..=inst.len() {
                let bound = inst.k.powi(n as i32) * c.p as f64 * inst.epsilon;
                if inst.dist(a, b) > bound + BOUND_TOL {
                    failures.push(format!("seed {seed}: chain ({}, {}) step {n}", c.a, c.b));
                    break;
                }
                a = inst.f(a);
                b = inst.f(b);
            }
        }
    }
    check(
        count >= UNIQUENESS_SUITE_SIZE && failures.is_empty(),
        format!("{count} instances, {chains} chains, all starts agree"),
        format!("{count} instances, failures {:?}", failures.iter().take(3).collect::<Vec<_>>()),
    )
}

fn spectral_norm(a: [[f64; 2]; 2]) -> f64 {
    // Largest singular value of a 2x2 matrix from the eigenvalues of AᵀA.
    let p = a[0][0] * a[0][0] + a[1][0] * a[1][0];
    let q = a[0][0] * a[0][1] + a[1][0] * a[1][1];
    let r = a[0][1] * a[0][1] + a[1][1] * a[1][1];
    let mean = (p + r) / 2.0;
    (mean + ((p - r) * (p - r) / 4.0 + q * q).sqrt()).sqrt()
}

fn criterion_6() -> Outcome {
    let mut rng = SplitMix::new(6);
    let mut violations = 0;
    for _ in 0..200 {
        let k = rng.uniform(0.1, 0.95);
        let mut a = [[0.0; 2]; 2];
        for v in a.iter_mut().flatten() {
            *v = rng.uniform(-1.0, 1.0);
        }
        let scale = k * rng.uniform(0.05, 1.0) / spectral_norm(a);
        for v in a.iter_mut().flatten() {
            *v *= scale;
        }
        let b = [rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)];
        let map = RealMap::parse(&[
            format!("({:e})*x1 + ({:e})*x2 + ({:e})", a[0][0], a[0][1], b[0]),
            format!("({:e})*x1 + ({:e})*x2 + ({:e})", a[1][0], a[1][1], b[1]),
        ])
        .unwrap();
        let verts: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)]).collect();
        let path = Polyline::new(verts.clone()).unwrap();
        let apply = |v: &[f64]| [a[0][0] * v[0] + a[0][1] * v[1] + b[0], a[1][0] * v[0] + a[1][1] * v[1] + b[1]];
        let dist = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let len: f64 = verts.windows(2).map(|w| dist([w[0][0], w[0][1]], [w[1][0], w[1][1]])).sum();
        let img_len: f64 = verts.windows(2).map(|w| dist(apply(&w[0]), apply(&w[1]))).sum();
        let endpoint = dist(apply(&verts[0]), apply(&verts[7]));

        let lib = check_prop6(&map, &path, k, 4).unwrap();
        let lib_img = polyline_length(&image_polyline(&map, &path, 4).unwrap());
        if img_len > k * len + PATH_TOL
            || endpoint > k * len + PATH_TOL
            || !lib.verdict
            || (lib_img - img_len).abs() > PATH_TOL
        {
            violations += 1;
        }
    }
    check(violations == 0, "200 affine maps, 0 violations", format!("{violations} violations"))
}

fn criterion_7() -> Outcome {
    let gamma0 = Polyline::new(vec![vec![1.0, 0.0], vec![0.5, 0.0]]).unwrap();
    let map = RealMap::parse(&["x1/2", "x2/2"]).unwrap();
    let (n, k, l0) = (20, 0.5, 0.5);
    let b = build_orbit_instance(&gamma0, &map, n, 0.55, k, 1).unwrap();
    let valid =
        validate_metric(&b.instance.space).is_valid() && validate_relation(&b.instance.relation).is_transitive();
    let r = solve_t3(&b.instance).unwrap();
    let solved = r.xstar == Some(n) && r.certificate.overall;
    let mut dominated = true;
    for i in 0..=n {
        for j in 0..=n {
            dominated &= b.ambient_dists[i][j] <= b.d0_dists[i][j] + BOUND_TOL;
        }
    }
    // Orbit points are (2^-t, 0), so ambient tails are |2^-n - 2^-m|.
    let mut tails = true;
    for i in 0..=n {
        for j in i + 1..=n {
            let d = b.ambient_dists[i][j];
            tails &= (d - (0.5f64.powi(i as i32) - 0.5f64.powi(j as i32))).abs() < 1e-15;
            tails &= d < k.powi(i as i32) * l0 / (1.0 - k);
        }
    }
    check(
        valid && solved && dominated && tails,
        format!("{} points, limit {n}, d <= d0, tail bounds dominate", b.instance.len()),
        format!("valid {valid}, solved {solved} ({:?}), dominated {dominated}, tails {tails}", r.xstar),
    )
}

fn criterion_8() -> Outcome {
    let got = (
        tail_bound(0.5, 1.0, 3).unwrap(),
        select_n0(3, 0.5).unwrap(),
        select_n0(1, 0.5).unwrap(),
        step_bound(1, 0.5, 1.1, 2).unwrap(),
    );
    check(got == (0.25, 2, 1, 0.275), "exact values", format!("{got:?}"))
}

fn criterion_9() -> Outcome {
    let (x1, x2) = (0.7f64, -1.3f64);
    let fixtures: [(&str, f64); 20] = [
        ("1 + 2 * 3", 7.0),
        ("(1 + 2) * 3", 9.0),
        ("2 ^ 3 ^ 2", 512.0),
        ("-2 ^ 2", -4.0),
        ("x1 * x2", x1 * x2),
        ("x1 - x2 - 1", x1 - x2 - 1.0),
        ("8 / 4 / 2", 1.0),
        ("abs(x2)", 1.3),
        ("sqrt(16)", 4.0),
        ("exp(0)", 1.0),
        ("sin(x1)", x1.sin()),
        ("cos(x1) ^ 2 + sin(x1) ^ 2", 1.0),
        ("min(x1, x2)", x2),
        ("max(x1, 3 * x2)", x1),
        ("pow(2, 10)", 1024.0),
        ("0.5 * x1 + 0.25", 0.6),
        ("2.5 * 4 - 10", 0.0),
        ("--x2", x2),
        ("x1 / (1 + x1 ^ 2)", x1 / (1.0 + x1 * x1)),
        ("exp(-(x1 ^ 2) / 2)", (-x1 * x1 / 2.0).exp()),
    ];
    let mut problems = Vec::new();
    for (src, want) in fixtures {
        let e = parse_expr(src, 2).unwrap();
        let again = parse_expr(&e.to_string(), 2).unwrap();
        if again != e {
            problems.push(format!("{src}: round trip gave {again}"));
        }
        let got = e.eval(&[x1, x2]).unwrap();
        if (got - want).abs() > EVAL_TOL {
            problems.push(format!("{src}: {got} != {want}"));
        }
    }
    let malformed = [("1 +", 3), ("(x1", 3), ("2 * * 3", 4), ("1 2", 2), ("sin x1", 4)];
    for (src, pos) in malformed {
        match parse_expr(src, 2) {
            Err(ExprError::Parse { position, .. }) if position == pos => {}
            other => problems.push(format!("{src}: {other:?}")),
        }
    }
    check(problems.is_empty(), "20 fixtures round-trip and evaluate, 5 offsets match", problems.join("; "))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let base = GeneratorParams { seed: 0, n: 6, ..Default::default() };
    let d = counterexample_mine(&base, Drop::ContractionD, MINING_BUDGET).unwrap();
    let e = counterexample_mine(&base, Drop::ConditionE, MINING_BUDGET).unwrap();
    let control = counterexample_mine(&base, Drop::None, MINING_BUDGET).unwrap();
    let elapsed = start.elapsed();
    let d_ok = d.hit().is_some_and(|h| {
        !h.certificate.conditions["d"].holds
            && h.per_start.iter().any(|s| matches!(s, relfix::oracle::Settle::Cycle { .. }))
    });
    let e_ok = e.hit().is_some_and(|h| !h.certificate.conditions["e"].holds && h.fixed_points.len() >= 2);
    let ok = d_ok && e_ok && control.hit().is_none() && elapsed < Duration::from_secs(60);
    check(
        ok,
        format!(
            "contraction-d hit at seed {}, condition-e hit at seed {}, control exhausted, {elapsed:?}",
            d.hit().unwrap().seed,
            e.hit().unwrap().seed
        ),
        format!("d {d_ok}, e {e_ok}, control hit {:?}, {elapsed:?}", control.hit().map(|h| h.seed)),
    )
}

#[test]
fn acceptance() {
    let suite = existence_suite();
    let results = [
        criterion_1(),
        criterion_2(&suite),
        criterion_3(&suite),
        criterion_4(&suite),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    // Written to the handle directly so the lines survive output capture.
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for (i, r) in results.iter().enumerate() {
        let verdict = if r.ok { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {:>2}: {verdict} - {}", i + 1, r.detail).unwrap();
    }
    drop(out);
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
