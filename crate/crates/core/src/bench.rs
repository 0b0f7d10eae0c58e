//! Synthetic instances, experiment grids and result summaries.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{run_sa_with, Budget, SAParams};
use crate::error::{Error, Result};
use crate::evaluation::Evaluator;
use crate::exact::{solve_exact, team_count, ExactOptions, DEFAULT_TEAM_LIMIT, MAX_STUDENTS};
use crate::io::{importance_value, level_value};
use crate::model::{
    quantity_distribution, EvalConfig, Gender, PersonalityProfile, Roster, Student, Task, TaskType,
};
use crate::synteam::{rng_from_seed, run_synteam_with, SynTeamParams};
use crate::trace::AnytimeTrace;

/// The seven competences used by the bundled task library and synthetic rosters.
pub const GARDNER_COMPETENCES: [&str; 7] = [
    "linguistic",
    "logic_mathematics",
    "visual_spatial",
    "bodily_kinesthetic",
    "musical",
    "intrapersonal",
    "interpersonal",
];

/// Seeded roster with uniform personality traits on `[-1, 1]`, uniform
/// competence levels on `[0, 1]` and each student a woman with probability
/// `gender_ratio`.
pub fn synthetic_roster(n: usize, seed: u64, gender_ratio: f64) -> Roster {
    let mut rng = rng_from_seed(seed);
    let width = n.saturating_sub(1).to_string().len().max(3);
    let students = (0..n)
        .map(|i| {
            let gender = if rng.gen::<f64>() < gender_ratio {
                Gender::Woman
            } else {
                Gender::Man
            };
            let mut trait_ = || rng.gen_range(-1.0..=1.0);
            let profile = PersonalityProfile::new(trait_(), trait_(), trait_(), trait_());
            let levels = GARDNER_COMPETENCES
                .iter()
                .map(|c| (c.to_string(), rng.gen_range(0.0..=1.0)))
                .collect();
            Student {
                id: format!("s{i:0width$}"),
                gender,
                profile,
                levels,
            }
        })
        .collect();
    Roster::new(students).expect("generated roster is valid")
}

/// The four bundled task types, with proficiency weight 0.8.
pub fn task_library() -> Vec<TaskType> {
    let spec: [(&str, &[(&str, &str, &str)]); 4] = [
        (
            "body-rythm",
            &[
                ("bodily_kinesthetic", "advanced", "very-important"),
                ("musical", "intermediate", "fairly-important"),
                ("linguistic", "intermediate", "slightly-important"),
                ("interpersonal", "advanced", "very-important"),
                ("visual_spatial", "novice", "slightly-important"),
            ],
        ),
        (
            "entrepreneur",
            &[
                ("linguistic", "advanced", "fairly-important"),
                ("logic_mathematics", "intermediate", "very-important"),
                ("visual_spatial", "novice", "slightly-important"),
                ("musical", "novice", "slightly-important"),
                ("interpersonal", "advanced", "very-important"),
                ("intrapersonal", "intermediate", "important"),
            ],
        ),
        (
            "arts-design",
            &[
                ("linguistic", "novice", "slightly-important"),
                ("visual_spatial", "advanced", "very-important"),
                ("intrapersonal", "intermediate", "fairly-important"),
            ],
        ),
        (
            "english",
            &[
                ("linguistic", "intermediate", "very-important"),
                ("intrapersonal", "novice", "important"),
                ("interpersonal", "advanced", "very-important"),
            ],
        ),
    ];
    spec.iter()
        .map(|(name, reqs)| {
            TaskType::new(
                *name,
                0.8,
                reqs.iter().map(|&(c, level, importance)| {
                    (
                        c,
                        level_value(level).expect("library label"),
                        importance_value(importance).expect("library label"),
                    )
                }),
            )
            .expect("library task type is valid")
        })
        .collect()
}

pub fn library_task(name: &str) -> Option<TaskType> {
    task_library().into_iter().find(|t| t.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Exact,
    SynTeam,
    Annealing,
}

impl Algorithm {
    pub fn id(&self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::SynTeam => "synteam",
            Algorithm::Annealing => "annealing",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Algorithm::Exact),
            "synteam" => Some(Algorithm::SynTeam),
            "annealing" => Some(Algorithm::Annealing),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub roster: Roster,
    pub task: Task,
    pub config: EvalConfig,
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub label: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub task: String,
    pub seed: u64,
    /// Team enumeration and scoring (exact solver only).
    pub gen_time_s: f64,
    pub solve_time_s: f64,
    pub best_s: f64,
    pub best_log_s: f64,
    /// Best value over the verified optimum, when the exact solver ran on the same instance.
    pub ratio: Option<f64>,
    #[serde(skip)]
    pub trace: AnytimeTrace,
}

impl ExperimentResult {
    pub fn total_time_s(&self) -> f64 {
        self.gen_time_s + self.solve_time_s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub label: String,
    pub algorithm: Algorithm,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct MatrixReport {
    pub results: Vec<ExperimentResult>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub tasks: Vec<TaskType>,
    pub repeats: usize,
    pub seed: u64,
    pub config: EvalConfig,
    pub gender_ratio: f64,
    /// Annealing budget when SynTeam is not part of the run; otherwise
    /// annealing gets the time SynTeam used on the same instance.
    pub sa_budget: Option<Duration>,
    pub team_limit: u128,
    /// Run cells on the rayon pool. Off gives cleaner timings.
    pub parallel: bool,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n_values: vec![8, 12, 16, 20, 24],
            m_values: vec![2, 3, 4],
            lambdas: vec![0.2, 0.8],
            tasks: task_library(),
            repeats: 20,
            seed: 0,
            config: EvalConfig::default(),
            gender_ratio: 0.5,
            sa_budget: None,
            team_limit: DEFAULT_TEAM_LIMIT,
            parallel: true,
        }
    }
}

fn mix(mut h: u64, v: u64) -> u64 {
    // splitmix64 step
    h ^= v
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(h << 6)
        .wrapping_add(h >> 2);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

impl Grid {
    /// One instance per (n, m, λ, task, repeat), each with its own derived seed.
    pub fn instances(&self) -> Vec<Instance> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &m in &self.m_values {
                if quantity_distribution(n, m).is_err() {
                    continue;
                }
                for &lambda in &self.lambdas {
                    for (ti, tt) in self.tasks.iter().enumerate() {
                        for r in 0..self.repeats {
                            let seed = [n as u64, m as u64, lambda.to_bits(), ti as u64, r as u64]
                                .into_iter()
                                .fold(self.seed, mix);
                            let task = Task::new(
                                tt.with_lambda(lambda).expect("grid lambda in [0, 1]"),
                                m,
                            )
                            .expect("grid m >= 2");
                            out.push(Instance {
                                roster: synthetic_roster(n, seed, self.gender_ratio),
                                label: format!("{}-n{n}-m{m}-l{lambda}-r{r}", tt.name),
                                task,
                                config: self.config,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Runs every algorithm on every grid instance.
pub fn run_matrix(grid: &Grid, algorithms: &[Algorithm]) -> MatrixReport {
    let instances = grid.instances();
    let cells: Vec<(Vec<ExperimentResult>, Vec<CellFailure>)> = if grid.parallel {
        instances
            .par_iter()
            .map(|inst| run_instance(inst, algorithms, grid))
            .collect()
    } else {
        instances
            .iter()
            .map(|inst| run_instance(inst, algorithms, grid))
            .collect()
    };
    let mut report = MatrixReport::default();
    for (r, f) in cells {
        report.results.extend(r);
        report.failures.extend(f);
    }
    report
        .results
        .sort_by(|a, b| (&a.label, a.algorithm).cmp(&(&b.label, b.algorithm)));
    report
        .failures
        .sort_by(|a, b| (&a.label, a.algorithm).cmp(&(&b.label, b.algorithm)));
    report
}

fn run_instance(
    inst: &Instance,
    algorithms: &[Algorithm],
    grid: &Grid,
) -> (Vec<ExperimentResult>, Vec<CellFailure>) {
    let mut results = Vec::new();
    let mut failures = Vec::new();
    let n = inst.roster.len();
    let m = inst.task.m;
    let base = |algorithm| ExperimentResult {
        label: inst.label.clone(),
        algorithm,
        n,
        m,
        lambda: inst.task.lambda(),
        task: inst.task.task_type.name.clone(),
        seed: inst.seed,
        gen_time_s: 0.0,
        solve_time_s: 0.0,
        best_s: 0.0,
        best_log_s: 0.0,
        ratio: None,
        trace: AnytimeTrace::new(),
    };
    let mut fail = |algorithm, e: &dyn std::fmt::Display| {
        failures.push(CellFailure {
            label: inst.label.clone(),
            algorithm,
            message: e.to_string(),
        })
    };
    let eval = match Evaluator::new(&inst.roster, &inst.task, &inst.config) {
        Ok(e) => e,
        Err(e) => {
            for &a in algorithms {
                fail(a, &e);
            }
            return (results, failures);
        }
    };

    let mut exact_log = None;
    if algorithms.contains(&Algorithm::Exact) {
        let admitted = quantity_distribution(n, m)
            .map(|d| team_count(n, &d) <= grid.team_limit && n <= MAX_STUDENTS)
            .unwrap_or(false);
        if !admitted {
            fail(
                Algorithm::Exact,
                &"instance exceeds the exact solver guards",
            );
        } else {
            let opts = ExactOptions {
                team_limit: Some(grid.team_limit),
                ..Default::default()
            };
            match solve_exact(&inst.roster, &inst.task, &inst.config, &opts) {
                Ok(sol) => {
                    exact_log = Some(sol.solution.score.log_value);
                    results.push(ExperimentResult {
                        gen_time_s: sol.gen_time_s,
                        solve_time_s: sol.solve_time_s,
                        best_s: sol.solution.score.value,
                        best_log_s: sol.solution.score.log_value,
                        ratio: Some(1.0),
                        trace: sol.solution.trace,
                        ..base(Algorithm::Exact)
                    });
                }
                Err(e) => fail(Algorithm::Exact, &e),
            }
        }
    }
    let ratio = |log: f64| exact_log.map(|opt| (log - opt).exp());

    let mut synteam_time = None;
    if algorithms.contains(&Algorithm::SynTeam) {
        let params = SynTeamParams::for_team_count(n / m, inst.seed);
        let start = std::time::Instant::now();
        match run_synteam_with(&eval, &params) {
            Ok((sol, _)) => {
                let elapsed = start.elapsed();
                synteam_time = Some(elapsed);
                results.push(ExperimentResult {
                    solve_time_s: elapsed.as_secs_f64(),
                    best_s: sol.score.value,
                    best_log_s: sol.score.log_value,
                    ratio: ratio(sol.score.log_value),
                    trace: sol.trace,
                    ..base(Algorithm::SynTeam)
                });
            }
            Err(e) => fail(Algorithm::SynTeam, &e),
        }
    }

    if algorithms.contains(&Algorithm::Annealing) {
        match synteam_time.or(grid.sa_budget) {
            None => fail(
                Algorithm::Annealing,
                &"annealing needs a budget: run SynTeam alongside or set sa_budget",
            ),
            Some(budget) => {
                let params = SAParams::new(
                    Budget::Time(budget.max(Duration::from_micros(1))),
                    inst.seed,
                );
                let start = std::time::Instant::now();
                match run_sa_with(&eval, &params) {
                    Ok((sol, _)) => results.push(ExperimentResult {
                        solve_time_s: start.elapsed().as_secs_f64(),
                        best_s: sol.score.value,
                        best_log_s: sol.score.log_value,
                        ratio: ratio(sol.score.log_value),
                        trace: sol.trace,
                        ..base(Algorithm::Annealing)
                    }),
                    Err(e) => fail(Algorithm::Annealing, &e),
                }
            }
        }
    }
    (results, failures)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub algorithm: Algorithm,
    /// Present when grouping by instance size.
    pub n: Option<usize>,
    pub m: usize,
    pub lambda: f64,
    /// Present when grouping by task type.
    pub task: Option<String>,
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        values[k / 2]
    } else {
        (values[k / 2 - 1] + values[k / 2]) / 2.0
    }
}

fn summarize(
    results: &[ExperimentResult],
    key: impl Fn(&ExperimentResult) -> (Algorithm, Option<usize>, usize, u64, Option<String>),
) -> Result<Vec<RatioSummary>> {
    let mut groups: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.algorithm != Algorithm::Exact) {
        let ratio = r
            .ratio
            .ok_or_else(|| Error::MissingBaseline(r.label.clone()))?;
        groups.entry(key(r)).or_default().push(ratio);
    }
    Ok(groups
        .into_iter()
        .map(|((algorithm, n, m, lambda_bits, task), mut ratios)| {
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            RatioSummary {
                algorithm,
                n,
                m,
                lambda: f64::from_bits(lambda_bits),
                task,
                count: ratios.len(),
                min,
                median: median(&mut ratios),
                mean,
            }
        })
        .collect())
}

/// Min/median/mean quality ratio per (algorithm, m, λ, task).
pub fn quality_ratio_summary(results: &[ExperimentResult]) -> Result<Vec<RatioSummary>> {
    summarize(results, |r| {
        (
            r.algorithm,
            None,
            r.m,
            r.lambda.to_bits(),
            Some(r.task.clone()),
        )
    })
}

/// Min/median/mean quality ratio per (algorithm, n, m, λ), pooling task types.
pub fn quality_ratio_by_size(results: &[ExperimentResult]) -> Result<Vec<RatioSummary>> {
    summarize(results, |r| {
        (r.algorithm, Some(r.n), r.m, r.lambda.to_bits(), None)
    })
}

/// Writes the plot-data CSVs (runtime, quality ratio, anytime and annealing comparison).
pub fn write_figure_data(results: &[ExperimentResult], dir: &Path) -> Result<()> {
    use crate::io::SchemaCsvWriter;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    type Key = (String, u64, usize, usize, Algorithm);
    let mut by_point: BTreeMap<Key, Vec<&ExperimentResult>> = BTreeMap::new();
    for r in results {
        by_point
            .entry((r.task.clone(), r.lambda.to_bits(), r.m, r.n, r.algorithm))
            .or_default()
            .push(r);
    }
    let mean = |v: &[&ExperimentResult], f: fn(&ExperimentResult) -> f64| {
        v.iter().map(|r| f(r)).sum::<f64>() / v.len() as f64
    };

    let mut total = SchemaCsvWriter::create(
        &dir.join("fig1_total_time.csv"),
        &[
            "task",
            "lambda",
            "m",
            "n",
            "algorithm",
            "count",
            "mean_total_time_s",
        ],
    )?;
    let mut split = SchemaCsvWriter::create(
        &dir.join("fig2_computation_time.csv"),
        &[
            "task",
            "lambda",
            "m",
            "n",
            "algorithm",
            "mean_gen_time_s",
            "mean_solve_time_s",
        ],
    )?;
    let mut quality = SchemaCsvWriter::create(
        &dir.join("fig3_quality_ratio.csv"),
        &[
            "task",
            "lambda",
            "m",
            "n",
            "algorithm",
            "mean_ratio",
            "min_ratio",
        ],
    )?;
    for ((task, lambda, m, n, alg), rs) in &by_point {
        let lambda = f64::from_bits(*lambda).to_string();
        let head = [
            task.clone(),
            lambda,
            m.to_string(),
            n.to_string(),
            alg.id().to_string(),
        ];
        let row = |extra: Vec<String>| head.iter().cloned().chain(extra).collect::<Vec<_>>();
        total.write(&row(vec![
            rs.len().to_string(),
            mean(rs, ExperimentResult::total_time_s).to_string(),
        ]))?;
        split.write(&row(vec![
            mean(rs, |r| r.gen_time_s).to_string(),
            mean(rs, |r| r.solve_time_s).to_string(),
        ]))?;
        let ratios: Vec<f64> = rs.iter().filter_map(|r| r.ratio).collect();
        if !ratios.is_empty() {
            let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            quality.write(&row(vec![avg.to_string(), min.to_string()]))?;
        }
    }
    total.finish()?;
    split.finish()?;
    quality.finish()?;

    let optimum: BTreeMap<&str, f64> = results
        .iter()
        .filter(|r| r.algorithm == Algorithm::Exact)
        .map(|r| (r.label.as_str(), r.best_log_s))
        .collect();
    let mut anytime = SchemaCsvWriter::create(
        &dir.join("fig4_anytime.csv"),
        &["label", "algorithm", "seed", "elapsed_s", "ratio"],
    )?;
    for r in results {
        if let Some(&opt) = optimum.get(r.label.as_str()) {
            for p in r.trace.points() {
                anytime.write(&[
                    r.label.clone(),
                    r.algorithm.id().into(),
                    r.seed.to_string(),
                    p.elapsed_s.to_string(),
                    (p.best.log_value - opt).exp().to_string(),
                ])?;
            }
        }
    }
    anytime.finish()?;

    let mut compare = SchemaCsvWriter::create(
        &dir.join("fig5_sa_comparison.csv"),
        &[
            "label",
            "n",
            "m",
            "lambda",
            "task",
            "seed",
            "synteam_S",
            "sa_S",
            "improvement_pct",
        ],
    )?;
    let synteam: BTreeMap<&str, &ExperimentResult> = results
        .iter()
        .filter(|r| r.algorithm == Algorithm::SynTeam)
        .map(|r| (r.label.as_str(), r))
        .collect();
    for sa in results
        .iter()
        .filter(|r| r.algorithm == Algorithm::Annealing)
    {
        if let Some(st) = synteam.get(sa.label.as_str()) {
            let pct = ((st.best_log_s - sa.best_log_s).exp() - 1.0) * 100.0;
            compare.write(&[
                sa.label.clone(),
                sa.n.to_string(),
                sa.m.to_string(),
                sa.lambda.to_string(),
                sa.task.clone(),
                sa.seed.to_string(),
                st.best_s.to_string(),
                sa.best_s.to_string(),
                pct.to_string(),
            ])?;
        }
    }
    compare.finish()
}
