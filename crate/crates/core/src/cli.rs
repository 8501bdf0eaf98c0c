//! The `relfix` command line.
//!
//! Exit codes: 0 when the command succeeds and its verdict holds, 1 when a
//! check fails, a hypothesis is violated or the oracle disagrees, 2 for
//! invalid input, I/O errors and usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chain::find_monotonic_chain;
use crate::error::{invalid, Result};
use crate::fmt::{g17, to_json};
use crate::io::{format_vector, instance_json, load_finite, write_trace_csv, Instance, InstanceFile, PathsFile};
use crate::oracle::{
    brute_force_check, counterexample_mine, random_instance, Drop, GeneratorParams, MapMode, MetricMode, RelationMode,
};
use crate::paths::{build_orbit_instance, check_prop6, orbit_tail_bound, polyline_length};
use crate::solver::{check_hypotheses, solve_real, solve_t3, solve_t3_localized, solve_t5, StopRule};
use crate::space::{FiniteInstance, MetricViolation};

#[derive(Debug, Parser)]
#[command(name = "relfix", version, about = "Certified fixed points of self-maps on finite ordered metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check metric axioms and transitivity of an instance.
    Validate {
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Find a shortest ε-monotonic chain between two points.
    Chain {
        instance: PathBuf,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Print the hypothesis report as JSON.
    Check {
        instance: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = theorem)]
        theorem: u8,
    },
    /// Run certified Picard iteration.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = theorem)]
        theorem: u8,
        /// Write the iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the full JSON report; `-` for standard output.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Advance along the orbit to the first start whose step is below ε.
        #[arg(long)]
        localize: bool,
        /// Comma-separated starts for the uniqueness run (default: all points).
        #[arg(long, value_delimiter = ',')]
        starts: Option<Vec<usize>>,
        /// Iteration cap for the real backend.
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        /// Step tolerance for the real backend.
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
    },
    /// Path-length checks and the orbit reduction.
    Paths {
        #[command(subcommand)]
        command: PathsCommand,
    },
    /// Brute-force verification and counterexample mining.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Generate a seeded random instance.
    Gen {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum PathsCommand {
    /// Check the path-length and endpoint contraction inequalities for γ0.
    Prop6 {
        paths: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build the truncated orbit instance and write it as instance JSON.
    Orbit {
        paths: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// Compare the solver against brute force on one instance.
    Verify { instance: PathBuf },
    /// Search seeds for an instance where one hypothesis fails and so does
    /// the conclusion.
    Mine {
        #[arg(long, value_enum)]
        drop: DropArg,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = 0.5)]
    k: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Embedding1d)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = MapArg::MonotoneRandom)]
    map: MapArg,
    #[arg(long, value_enum, default_value_t = RelationArg::IndexDag)]
    relation: RelationArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "embedding-1d")]
    Embedding1d,
    #[value(name = "embedding-2d")]
    Embedding2d,
    RandomExplicit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MapArg {
    MonotoneRandom,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RelationArg {
    IndexDag,
    Components,
    Universal,
    Raw,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DropArg {
    None,
    Transitivity,
    MonotonicityB,
    LimitComparabilityC,
    ContractionD,
    ConditionE,
}

impl From<DropArg> for Drop {
    fn from(d: DropArg) -> Drop {
        match d {
            DropArg::None => Drop::None,
            DropArg::Transitivity => Drop::Transitivity,
            DropArg::MonotonicityB => Drop::MonotonicityB,
            DropArg::LimitComparabilityC => Drop::LimitComparabilityC,
            DropArg::ContractionD => Drop::ContractionD,
            DropArg::ConditionE => Drop::ConditionE,
        }
    }
}

impl ParamArgs {
    fn params(&self) -> GeneratorParams {
        GeneratorParams {
            seed: self.seed,
            n: self.n,
            relation_density: self.density,
            metric_mode: match self.metric {
                MetricArg::Embedding1d => MetricMode::Embedding1d,
                MetricArg::Embedding2d => MetricMode::Embedding2d,
                MetricArg::RandomExplicit => MetricMode::RandomExplicit,
            },
            target_k: self.k,
            map_mode: match self.map {
                MapArg::MonotoneRandom => MapMode::MonotoneRandom,
                MapArg::Unconstrained => MapMode::Unconstrained,
            },
            relation_mode: match self.relation {
                RelationArg::IndexDag => RelationMode::IndexDag,
                RelationArg::Components => RelationMode::Components,
                RelationArg::Universal => RelationMode::Universal,
                RelationArg::Raw => RelationMode::Raw,
            },
        }
    }
}

fn theorem(s: &str) -> std::result::Result<u8, String> {
    match s {
        "3" => Ok(3),
        "5" => Ok(5),
        _ => Err(format!("expected 3 or 5, got {s}")),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Reports go to `out`, diagnostics to standard error.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                eprint!("{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn code(ok: bool) -> i32 {
    if ok {
        0
    } else {
        1
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn opt(x: Option<usize>) -> String {
    x.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Validate { instance, json } => {
            let inst = load_finite(&instance)?;
            let report = inst.validate();
            if json {
                write!(out, "{}", to_json(&report)?)?;
            } else {
                writeln!(out, "points: {}", inst.len())?;
                if report.metric.is_valid() {
                    writeln!(out, "metric: ok")?;
                }
                for v in &report.metric.violations {
                    writeln!(out, "metric violation: {}", describe_violation(v))?;
                }
                match report.relation.violations.first() {
                    None => writeln!(out, "relation: transitive")?,
                    Some((i, j, k)) => writeln!(
                        out,
                        "relation: not transitive, triple ({i}, {j}, {k}) and {} more",
                        report.relation.violations.len() - 1
                    )?,
                }
            }
            Ok(code(report.is_valid()))
        }
        Command::Chain { instance, from, to, epsilon, json } => {
            let inst = load_finite(&instance)?;
            let eps = epsilon.unwrap_or(inst.epsilon);
            let chain = find_monotonic_chain(&inst, from, to, eps)?;
            if json {
                write!(out, "{}", to_json(&chain)?)?;
            } else {
                match &chain {
                    Some(c) => {
                        let verts: Vec<String> = c.vertices.iter().map(|v| v.to_string()).collect();
                        let steps: Vec<String> = c.step_dists.iter().map(|&d| g17(d)).collect();
                        writeln!(out, "chain: {:?} {}", c.direction, verts.join(" -> "))?;
                        writeln!(out, "hops: {}", c.hops())?;
                        writeln!(out, "steps: {}", steps.join(" "))?;
                    }
                    None => writeln!(out, "no chain from {from} to {to} at epsilon {}", g17(eps))?,
                }
            }
            Ok(code(chain.is_some()))
        }
        Command::Check { instance, theorem } => {
            let inst = load_finite(&instance)?;
            let report = check_hypotheses(&inst, theorem)?;
            write!(out, "{}", to_json(&report)?)?;
            Ok(code(report.overall))
        }
        Command::Solve { instance, theorem, trace, json, localize, starts, max_iter, atol } => {
            let file = InstanceFile::load(&instance)?;
            match file.build()? {
                Instance::Finite(inst) => {
                    solve_finite(&inst, theorem, trace.as_deref(), json.as_deref(), localize, starts, out)
                }
                Instance::Real(inst) => {
                    let (result, t) = solve_real(&inst, &StopRule { max_iter, atol })?;
                    if let Some(path) = &trace {
                        write_trace_csv(&t, |p| format_vector(p), std::fs::File::create(path)?)?;
                    }
                    emit_json(json.as_deref(), &result, out)?;
                    if json.as_deref() != Some(Path::new("-")) {
                        writeln!(out, "status: {:?}", result.status)?;
                        writeln!(out, "x*: {}", format_vector(&result.xstar))?;
                        writeln!(out, "iterations: {}", result.iterations)?;
                        writeln!(out, "residual: {}", g17(result.residual))?;
                    }
                    Ok(code(result.accepted))
                }
            }
        }
        Command::Paths { command } => match command {
            PathsCommand::Prop6 { paths, json } => {
                let file = PathsFile::load(&paths)?;
                let check = check_prop6(&file.real_map()?, &file.gamma0()?, file.k, file.refinement)?;
                if json {
                    write!(out, "{}", to_json(&check)?)?;
                } else {
                    writeln!(out, "verdict: {}", check.verdict)?;
                    writeln!(out, "path length: {}", g17(check.path_length))?;
                    writeln!(out, "image length: {} <= {}", g17(check.image_length), g17(check.bound))?;
                    writeln!(out, "endpoint distance: {} <= {}", g17(check.endpoint_distance), g17(check.bound))?;
                }
                Ok(code(check.verdict))
            }
            PathsCommand::Orbit { paths, output } => {
                let file = PathsFile::load(&paths)?;
                let gamma0 = file.gamma0()?;
                let bundle =
                    build_orbit_instance(&gamma0, &file.real_map()?, file.n, file.epsilon, file.k, file.refinement)?;
                write_file(&output, &instance_json(&bundle.instance)?)?;
                let excess = bundle.max_ambient_excess();
                let l0 = polyline_length(&gamma0);
                writeln!(out, "points: {}", bundle.instance.len())?;
                writeln!(out, "gamma0 length: {}", g17(l0))?;
                writeln!(out, "max d - d0: {}", g17(excess))?;
                writeln!(out, "tail bound at 0: {}", g17(orbit_tail_bound(l0, file.k, 0)?))?;
                writeln!(out, "written: {}", output.display())?;
                Ok(code(excess <= crate::TAU_ABS))
            }
        },
        Command::Oracle { command } => match command {
            OracleCommand::Verify { instance } => {
                let inst = load_finite(&instance)?;
                let verdict = brute_force_check(&inst)?;
                write!(out, "{}", to_json(&verdict)?)?;
                Ok(code(verdict.agrees_with_solver))
            }
            OracleCommand::Mine { drop, budget, params, output } => {
                let drop = Drop::from(drop);
                let report = counterexample_mine(&params.params(), drop, budget)?;
                let text = to_json(&report)?;
                match &output {
                    Some(path) => write_file(path, &text)?,
                    None => write!(out, "{text}")?,
                }
                // The control run succeeds when nothing is found.
                let found = report.hit().is_some();
                Ok(code(if drop == Drop::None { !found } else { found }))
            }
        },
        Command::Gen { params, output } => {
            let inst = random_instance(&params.params())?;
            write_file(&output, &instance_json(&inst)?)?;
            writeln!(out, "written: {} ({} points)", output.display(), inst.len())?;
            Ok(0)
        }
    }
}

fn emit_json<T: serde::Serialize>(target: Option<&Path>, value: &T, out: &mut dyn Write) -> Result<()> {
    match target {
        None => Ok(()),
        Some(p) if p == Path::new("-") => {
            write!(out, "{}", to_json(value)?)?;
            Ok(())
        }
        Some(p) => write_file(p, &to_json(value)?),
    }
}

fn solve_finite(
    inst: &FiniteInstance,
    theorem: u8,
    trace: Option<&Path>,
    json: Option<&Path>,
    localize: bool,
    starts: Option<Vec<usize>>,
    out: &mut dyn Write,
) -> Result<i32> {
    let to_stdout = json == Some(Path::new("-"));
    match theorem {
        3 => {
            let (shift, result) = if localize {
                let (loc, r) = solve_t3_localized(inst)?;
                (Some(loc), r)
            } else {
                (None, solve_t3(inst)?)
            };
            if let Some(path) = trace {
                write_trace_csv(&result.trace, |p| p.to_string(), std::fs::File::create(path)?)?;
            }
            emit_json(json, &result, out)?;
            if !to_stdout {
                if let Some(loc) = shift {
                    writeln!(out, "localized start: {} after {} applications", loc.point, loc.applications)?;
                }
                writeln!(out, "x*: {}", opt(result.xstar))?;
                writeln!(out, "iterations: {}", result.iterations)?;
                writeln!(out, "residual: {}", result.residual.map_or("none".into(), g17))?;
                if let Some(c) = &result.chain {
                    writeln!(out, "chain hops m: {}", c.hops())?;
                }
                if let Some(b) = &result.trace.bounds {
                    writeln!(out, "n0: {}", b.n0)?;
                }
                write_conditions(&result.certificate, out)?;
            }
            Ok(code(result.xstar.is_some() && result.certificate.overall))
        }
        5 => {
            let starts = starts.unwrap_or_else(|| (0..inst.len()).collect());
            if starts.is_empty() {
                return Err(invalid("at least one start is required"));
            }
            if trace.is_some() {
                return Err(invalid("--trace is only available with --theorem 3"));
            }
            let result = solve_t5(inst, &starts)?;
            emit_json(json, &result, out)?;
            if !to_stdout {
                writeln!(out, "unique: {}", result.unique)?;
                writeln!(out, "limit from x0: {}", opt(result.reference))?;
                for s in &result.per_start {
                    writeln!(out, "start {}: {:?} limit {}", s.start, s.status, opt(s.limit))?;
                }
                writeln!(out, "propagation bounds hold: {}", result.propagation_holds())?;
                write_conditions(&result.certificate, out)?;
            }
            Ok(code(result.unique && result.certified()))
        }
        _ => unreachable!("theorem parser accepts 3 or 5"),
    }
}

fn write_conditions(report: &crate::contraction::HypothesisReport, out: &mut dyn Write) -> Result<()> {
    for (name, c) in &report.conditions {
        writeln!(out, "condition {name}: {}", if c.holds { "holds" } else { "fails" })?;
    }
    writeln!(out, "certificate: {}", if report.overall { "all true" } else { "incomplete" })?;
    Ok(())
}

fn describe_violation(v: &MetricViolation) -> String {
    match v {
        MetricViolation::NonZeroDiagonal { i, value } => format!("d({i},{i}) = {}", g17(*value)),
        MetricViolation::Asymmetric { i, j } => format!("d({i},{j}) != d({j},{i})"),
        MetricViolation::NonPositive { i, j, value } => format!("d({i},{j}) = {} is not positive", g17(*value)),
        MetricViolation::Triangle { i, j, k, excess } => {
            format!("triangle ({i}, {j}, {k}) exceeded by {}", g17(*excess))
        }
    }
}
