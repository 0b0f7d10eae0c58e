//! Command-line driver.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid input, 4 instance too large, 5 internal.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::anneal::{run_sa_with, Budget, SAParams};
use crate::assignment::solve_balanced_assignment;
use crate::bench::{
    library_task, quality_ratio_summary, run_matrix, synthetic_roster, task_library,
    write_figure_data, Algorithm, Grid,
};
use crate::error::Error;
use crate::evaluation::Evaluator;
use crate::exact::{solve_exact, ExactOptions};
use crate::io::{
    parse_roster, parse_task, read_partition, rescore, write_partition, write_results_csv,
    write_roster_csv, write_roster_json, write_traces_csv, PartitionFile, SchemaCsvWriter,
    TraceRows,
};
use crate::model::{EvalConfig, Roster, Task, Team};
use crate::synteam::{run_synteam_with, SynTeamParams};
use crate::Solution;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_GUARD: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "teamcomp",
    version,
    about = "Synergistic team composition solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact solver: enumerate teams, then a memoized search over partitions.
    Solve(SolveArgs),
    /// SynTeam local search.
    Heuristic(HeuristicArgs),
    /// Simulated-annealing baseline.
    Anneal(AnnealArgs),
    /// Optimal competence assignment for a single team.
    Assign(AssignArgs),
    /// Re-score a partition file and check what it records.
    Eval(EvalArgs),
    /// Run an experiment grid on synthetic rosters.
    Bench(BenchArgs),
    /// Write a seeded synthetic roster.
    GenRoster(GenRosterArgs),
}

#[derive(Args, Debug)]
struct Instance {
    #[arg(long)]
    roster: PathBuf,
    #[arg(long)]
    task: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    upsilon: f64,
    #[arg(long, default_value_t = 0.11)]
    alpha: f64,
    #[arg(long, default_value_t = 0.33)]
    beta: f64,
    #[arg(long, default_value_t = 0.33)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct Output {
    /// Partition JSON path.
    #[arg(long, default_value = "partition.json")]
    out: PathBuf,
    /// Trace CSV path; defaults to the partition path with a `.trace.csv` suffix.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    instance: Instance,
    #[command(flatten)]
    output: Output,
    /// Stop after this many seconds and report the incumbent.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Write the master problem in LP-like text form.
    #[arg(long)]
    dump_model: Option<PathBuf>,
    #[arg(long)]
    team_limit: Option<u128>,
}

#[derive(Args, Debug)]
struct HeuristicArgs {
    #[command(flatten)]
    instance: Instance,
    #[command(flatten)]
    output: Output,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    nl: Option<usize>,
}

#[derive(Args, Debug)]
struct AnnealArgs {
    #[command(flatten)]
    instance: Instance,
    #[command(flatten)]
    output: Output,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 1.0, conflicts_with = "iterations")]
    budget_s: f64,
    /// Count proposals instead of seconds; makes runs reproducible.
    #[arg(long)]
    iterations: Option<u64>,
}

#[derive(Args, Debug)]
struct AssignArgs {
    #[command(flatten)]
    instance: Instance,
    /// Comma-separated student ids.
    #[arg(long, value_delimiter = ',', required = true)]
    team: Vec<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,12,16,20,24")]
    n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    m_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.8")]
    lambda_list: Vec<f64>,
    /// Task names from the bundled library; all four by default.
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<String>,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "exact,synteam,annealing")]
    algorithms: Vec<String>,
    /// Run cells one at a time for cleaner timings.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct GenRosterArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    gender_ratio: f64,
    /// `.json` writes JSON, anything else CSV; stdout CSV when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::GuardExceeded { .. } => EXIT_GUARD,
        Error::MissingBaseline(_) => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

fn dispatch(command: Command) -> Result<i32, Error> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Heuristic(a) => heuristic(a),
        Command::Anneal(a) => anneal(a),
        Command::Assign(a) => assign(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::GenRoster(a) => gen_roster(a),
    }
}

fn load(instance: &Instance) -> Result<(Roster, Task, EvalConfig), Error> {
    let roster = parse_roster(&instance.roster)?;
    let task = parse_task(&instance.task)?;
    let config = EvalConfig {
        upsilon: instance.upsilon,
        alpha: instance.alpha,
        beta: instance.beta,
        gamma: instance.gamma,
        ..EvalConfig::default()
    };
    config.validate()?;
    Ok((roster, task, config))
}

fn trace_path(output: &Output) -> PathBuf {
    output.trace.clone().unwrap_or_else(|| {
        let mut p = output.out.clone().into_os_string();
        p.push(".trace.csv");
        PathBuf::from(p)
    })
}

fn emit(
    output: &Output,
    eval: &Evaluator<'_>,
    solution: &Solution,
    algorithm: Algorithm,
    seed: u64,
) -> Result<(), Error> {
    let file = PartitionFile::build(&solution.partition, eval);
    write_partition(&output.out, &file)?;
    write_traces_csv(
        &trace_path(output),
        [TraceRows {
            label: &eval.task().task_type.name,
            algorithm,
            seed,
            trace: &solution.trace,
        }],
    )?;
    println!(
        "{}: {} teams, S = {}, log S = {}",
        algorithm.id(),
        file.teams.len(),
        file.s,
        file.log_s
    );
    Ok(())
}

fn solve(a: SolveArgs) -> Result<i32, Error> {
    let (roster, task, config) = load(&a.instance)?;
    let time_budget = match a.time_budget {
        Some(s) if !(s > 0.0 && s.is_finite()) => {
            return Err(Error::InvalidConfig(format!(
                "time budget {s} must be positive"
            )))
        }
        s => s.map(Duration::from_secs_f64),
    };
    let opts = ExactOptions {
        time_budget,
        team_limit: a.team_limit,
        ..ExactOptions::default()
    };
    let sol = solve_exact(&roster, &task, &config, &opts)?;
    if let Some(path) = &a.dump_model {
        let f =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        sol.master
            .write_lp(&roster, std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    let eval = Evaluator::new(&roster, &task, &config)?;
    emit(&a.output, &eval, &sol.solution, Algorithm::Exact, 0)?;
    println!(
        "{} candidate teams, {} nodes, generation {:.3}s, search {:.3}s{}",
        sol.team_count,
        sol.nodes,
        sol.gen_time_s,
        sol.solve_time_s,
        if sol.optimal {
            ""
        } else {
            " (time budget hit, not proven optimal)"
        }
    );
    Ok(EXIT_OK)
}

fn heuristic(a: HeuristicArgs) -> Result<i32, Error> {
    let (roster, task, config) = load(&a.instance)?;
    let mut params = SynTeamParams::for_instance(roster.len(), task.m, a.seed)?;
    if let Some(nr) = a.nr {
        params.n_r = nr;
    }
    if let Some(nl) = a.nl {
        params.n_l = nl;
    }
    let eval = Evaluator::new(&roster, &task, &config)?;
    let (sol, stats) = run_synteam_with(&eval, &params)?;
    emit(&a.output, &eval, &sol, Algorithm::SynTeam, a.seed)?;
    println!(
        "{} iterations, {} improvements, {} swap scans",
        stats.iterations, stats.improvements, stats.swap_scans
    );
    Ok(EXIT_OK)
}

fn anneal(a: AnnealArgs) -> Result<i32, Error> {
    let (roster, task, config) = load(&a.instance)?;
    let budget = match a.iterations {
        Some(k) => Budget::Iterations(k),
        None if a.budget_s > 0.0 && a.budget_s.is_finite() => {
            Budget::Time(Duration::from_secs_f64(a.budget_s))
        }
        None => {
            return Err(Error::InvalidConfig(format!(
                "budget {} must be positive",
                a.budget_s
            )))
        }
    };
    let eval = Evaluator::new(&roster, &task, &config)?;
    let (sol, stats) = run_sa_with(&eval, &SAParams::new(budget, a.seed))?;
    emit(&a.output, &eval, &sol, Algorithm::Annealing, a.seed)?;
    println!(
        "{} proposals, {} accepted ({} worsening)",
        stats.proposals, stats.accepted, stats.accepted_worse
    );
    Ok(EXIT_OK)
}

fn assign(a: AssignArgs) -> Result<i32, Error> {
    let (roster, task, config) = load(&a.instance)?;
    let members = a
        .team
        .iter()
        .map(|id| {
            roster
                .index_of(id.trim())
                .ok_or_else(|| Error::InvalidTeam(format!("unknown student `{id}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let team = Team::new(members)?;
    let res = solve_balanced_assignment(&team, &task.task_type, config.upsilon, &roster)?;
    let assignment: Vec<serde_json::Value> = res
        .assignment
        .owners()
        .iter()
        .zip(&task.task_type.requirements)
        .map(|(&o, r)| {
            let s = roster.get(o);
            serde_json::json!({
                "competence": r.competence,
                "student": s.id,
                "required": r.level,
                "level": s.level(&r.competence),
                "weight": r.weight,
            })
        })
        .collect();
    let out = serde_json::json!({
        "schema": crate::io::SCHEMA_VERSION,
        "members": roster.ids(&team).collect::<Vec<_>>(),
        "u_prof": res.u_prof,
        "under": res.under,
        "over": res.over,
        "assignment": assignment,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("json value")
    );
    Ok(EXIT_OK)
}

fn eval(a: EvalArgs) -> Result<i32, Error> {
    let (roster, task, config) = load(&a.instance)?;
    let file = read_partition(&a.partition)?;
    let evaluator = Evaluator::new(&roster, &task, &config)?;
    let report = rescore(&file, &evaluator, a.tolerance)?;
    println!(
        "recorded S = {}, recomputed S = {}, log S = {}",
        report.recorded_s, report.recomputed.s, report.recomputed.log_s
    );
    if report.mismatches.is_empty() {
        println!("ok");
        Ok(EXIT_OK)
    } else {
        for m in &report.mismatches {
            eprintln!("mismatch: {m}");
        }
        Ok(EXIT_INPUT)
    }
}

fn bench(a: BenchArgs) -> Result<i32, Error> {
    let tasks = if a.tasks.is_empty() {
        task_library()
    } else {
        a.tasks
            .iter()
            .map(|name| library_task(name.trim()).ok_or_else(|| Error::UnknownLabel(name.clone())))
            .collect::<Result<_, _>>()?
    };
    let algorithms = a
        .algorithms
        .iter()
        .map(|s| Algorithm::from_id(s.trim()).ok_or_else(|| Error::UnknownLabel(s.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(l) = a.lambda_list.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::InvalidConfig(format!("lambda {l} not in [0, 1]")));
    }
    let grid = Grid {
        n_values: a.n_list,
        m_values: a.m_list,
        lambdas: a.lambda_list,
        tasks,
        repeats: a.repeats,
        seed: a.seed,
        parallel: !a.sequential,
        ..Grid::default()
    };
    // Anything not admitted by quantity_distribution is skipped by the grid; say so.
    for &n in &grid.n_values {
        for &m in &grid.m_values {
            if crate::model::quantity_distribution(n, m).is_err() {
                eprintln!("skipping n = {n}, m = {m}: no valid team sizes");
            }
        }
    }
    let dir = &a.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let report = run_matrix(&grid, &algorithms);
    for f in &report.failures {
        eprintln!(
            "cell {} [{}] failed: {}",
            f.label,
            f.algorithm.id(),
            f.message
        );
    }
    write_results_csv(&dir.join("results.csv"), &report.results)?;
    write_traces_csv(
        &dir.join("traces.csv"),
        report.results.iter().map(|r| TraceRows {
            label: &r.label,
            algorithm: r.algorithm,
            seed: r.seed,
            trace: &r.trace,
        }),
    )?;
    write_figure_data(&report.results, dir)?;

    let with_baseline: Vec<_> = report
        .results
        .iter()
        .filter(|r| r.ratio.is_some() || r.algorithm == Algorithm::Exact)
        .cloned()
        .collect();
    if algorithms.contains(&Algorithm::Exact) && algorithms.len() > 1 {
        let summary = quality_ratio_summary(&with_baseline)?;
        write_summary(&dir.join("summary.csv"), &summary)?;
        println!("algorithm  m  lambda  task           count  min     median  mean");
        for s in &summary {
            println!(
                "{:<10} {:<2} {:<7} {:<14} {:<6} {:.4}  {:.4}  {:.4}",
                s.algorithm.id(),
                s.m,
                s.lambda,
                s.task.as_deref().unwrap_or("-"),
                s.count,
                s.min,
                s.median,
                s.mean
            );
        }
    }
    println!(
        "{} results, {} failed cells, written to {}",
        report.results.len(),
        report.failures.len(),
        dir.display()
    );
    Ok(EXIT_OK)
}

fn write_summary(path: &Path, summary: &[crate::bench::RatioSummary]) -> Result<(), Error> {
    let mut w = SchemaCsvWriter::create(
        path,
        &[
            "algorithm",
            "m",
            "lambda",
            "task",
            "count",
            "min",
            "median",
            "mean",
        ],
    )?;
    for s in summary {
        w.write(&[
            s.algorithm.id().to_string(),
            s.m.to_string(),
            s.lambda.to_string(),
            s.task.clone().unwrap_or_default(),
            s.count.to_string(),
            s.min.to_string(),
            s.median.to_string(),
            s.mean.to_string(),
        ])?;
    }
    w.finish()
}

fn gen_roster(a: GenRosterArgs) -> Result<i32, Error> {
    if !(0.0..=1.0).contains(&a.gender_ratio) {
        return Err(Error::InvalidConfig(format!(
            "gender ratio {} not in [0, 1]",
            a.gender_ratio
        )));
    }
    let roster = synthetic_roster(a.n, a.seed, a.gender_ratio);
    match &a.out {
        None => write_roster_csv(&roster, std::io::stdout().lock())?,
        Some(path) => {
            let p = path.display().to_string();
            let f =
                std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(&p, e))?);
            if path.extension().is_some_and(|e| e == "json") {
                write_roster_json(&roster, f)?;
            } else {
                write_roster_csv(&roster, f)?;
            }
        }
    }
    Ok(EXIT_OK)
}
