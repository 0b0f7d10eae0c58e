//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. With `ACCEPTANCE_STRICT=1` the process
//! exits non-zero when any criterion fails; otherwise failures are reported
//! without failing the test run.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;
use teamcomp::anneal::{acceptance_probability, temperature, Budget, SAParams};
use teamcomp::assignment::{brute_force_assignment, solve_balanced_assignment};
use teamcomp::bench::{
    median, run_matrix, synthetic_roster, task_library, Algorithm, ExperimentResult, Grid,
};
use teamcomp::evaluation::{combine, congeniality, synergistic_value, u_etj, u_gender, u_sntf};
use teamcomp::exact::{brute_force_partitions, solve_exact, ExactOptions};
use teamcomp::synteam::{random_partition, rng_from_seed};
use teamcomp::{
    quantity_distribution, EvalConfig, Evaluator, Gender, PersonalityProfile, Roster, Student,
    Task, TaskType, Team,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, started: Instant, limit: Option<Duration>, o: Outcome) -> bool {
    let elapsed = started.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = o.pass && in_time;
    let budget = limit.map_or(String::new(), |l| {
        format!(" / limit {:.0}s", l.as_secs_f64())
    });
    println!(
        "criterion {id} [{name}]: {} ({:.1}s{budget}) {}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        o.detail
    );
    pass
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Exact solver against exhaustive partition enumeration.
fn exact_vs_brute_force() -> Outcome {
    let ns = [4, 6, 8, 9, 10, 12];
    let ms = [2, 3, 4];
    let lambdas = [0.2, 0.8];
    let library = task_library();
    let mut combos = Vec::new();
    for &n in &ns {
        for &m in &ms {
            if quantity_distribution(n, m).is_err() {
                continue;
            }
            for t in 0..library.len() {
                for &l in &lambdas {
                    combos.push((n, m, t, l));
                }
            }
        }
    }
    let config = EvalConfig::default();
    let mut mismatches = Vec::new();
    for i in 0..200 {
        let (n, m, t, lambda) = combos[i % combos.len()];
        let roster = synthetic_roster(n, 1000 + i as u64, 0.5);
        let task = Task::new(library[t].with_lambda(lambda).unwrap(), m).unwrap();
        let exact = solve_exact(&roster, &task, &config, &ExactOptions::default()).unwrap();
        let (_, brute) = brute_force_partitions(&roster, &task, &config).unwrap();
        if !exact.optimal || !close(exact.solution.score.value, brute.value, 1e-9) {
            mismatches.push(format!(
                "n={n} m={m} task={} λ={lambda}: {} vs {}",
                library[t].name, exact.solution.score.value, brute.value
            ));
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!(
            "200 instances, {} mismatches {:?}",
            mismatches.len(),
            mismatches
        ),
    }
}

fn random_student(rng: &mut impl Rng, id: String, competences: &[String]) -> Student {
    let mut t = || rng.gen_range(-1.0..=1.0);
    let profile = PersonalityProfile::new(t(), t(), t(), t());
    Student {
        id,
        gender: if rng.gen() {
            Gender::Woman
        } else {
            Gender::Man
        },
        profile,
        levels: competences
            .iter()
            .map(|c| (c.clone(), rng.gen_range(0.0..=1.0)))
            .collect(),
    }
}

/// Balanced assignment solver against exhaustive enumeration.
fn assignment_vs_brute_force() -> Outcome {
    let mut rng = rng_from_seed(77);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for case in 0..1000 {
        let k = rng.gen_range(2..=5);
        let c = rng.gen_range(1..=6);
        let competences: Vec<String> = (0..c).map(|j| format!("c{j}")).collect();
        let students: Vec<Student> = (0..k)
            .map(|i| random_student(&mut rng, format!("s{i}"), &competences))
            .collect();
        let roster = Roster::new(students).unwrap();
        let tt = TaskType::new(
            format!("case{case}"),
            0.5,
            competences.iter().map(|name| {
                (
                    name.clone(),
                    rng.gen_range(0.0..=1.0),
                    rng.gen_range(0.05..=1.0),
                )
            }),
        )
        .unwrap();
        let upsilon = rng.gen_range(0.0..=1.0);
        let team = Team::new((0..k).collect()).unwrap();
        let fast = solve_balanced_assignment(&team, &tt, upsilon, &roster).unwrap();
        let brute = brute_force_assignment(&team, &tt, upsilon, &roster).unwrap();
        let diff = (fast.u_prof - brute.u_prof).abs();
        worst = worst.max(diff);
        if diff > 1e-9 {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("1000 cases, {failures} beyond 1e-9, max |Δu_prof| = {worst:.2e}"),
    }
}

/// Shared grid: exact and SynTeam on every (n, m, λ) cell, 20 instances each.
fn quality_grid() -> Vec<ExperimentResult> {
    let grid = Grid {
        n_values: vec![8, 12, 16, 20, 24],
        m_values: vec![2, 3, 4],
        lambdas: vec![0.2, 0.8],
        tasks: task_library(),
        repeats: 5,
        seed: 2024,
        ..Grid::default()
    };
    let report = run_matrix(&grid, &[Algorithm::Exact, Algorithm::SynTeam]);
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    report.results
}

fn quality_ratio(results: &[ExperimentResult]) -> Outcome {
    let mut cells: BTreeMap<(usize, usize, u64), Vec<f64>> = BTreeMap::new();
    let mut above_one = 0;
    for r in results.iter().filter(|r| r.algorithm == Algorithm::SynTeam) {
        let q = r.ratio.expect("exact baseline present");
        if q > 1.0 + 1e-9 {
            above_one += 1;
        }
        cells
            .entry((r.n, r.m, r.lambda.to_bits()))
            .or_default()
            .push(q);
    }
    let mut met = 0;
    let mut failing = Vec::new();
    for ((n, m, l), ratios) in &cells {
        let lambda = f64::from_bits(*l);
        let threshold = if lambda >= 0.5 { 0.95 } else { 0.75 };
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(ratios.len(), 20);
        if min >= threshold {
            met += 1;
        } else {
            failing.push(format!(
                "(n={n}, m={m}, λ={lambda}): min {min:.4} < {threshold}"
            ));
        }
    }
    let share = met as f64 / cells.len() as f64;
    Outcome {
        pass: share >= 0.9 && above_one == 0,
        detail: format!(
            "{met}/{} cells meet the threshold ({:.0}%), ratios above 1: {above_one}; failing cells: {}",
            cells.len(),
            share * 100.0,
            if failing.is_empty() { "none".to_string() } else { failing.join(", ") }
        ),
    }
}

/// SynTeam against annealing with the same wall-clock budget.
fn synteam_vs_annealing() -> (Outcome, Vec<ExperimentResult>) {
    let grid = Grid {
        n_values: vec![24],
        m_values: vec![3, 4],
        lambdas: vec![0.8],
        tasks: vec![task_library()[1].clone()],
        repeats: 20,
        seed: 99,
        parallel: false,
        ..Grid::default()
    };
    let report = run_matrix(&grid, &[Algorithm::SynTeam, Algorithm::Annealing]);
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [3, 4] {
        let pick = |a| {
            let mut v: Vec<f64> = report
                .results
                .iter()
                .filter(|r| r.m == m && r.algorithm == a)
                .map(|r| r.best_s)
                .collect();
            assert_eq!(v.len(), 20);
            median(&mut v)
        };
        let (st, sa) = (pick(Algorithm::SynTeam), pick(Algorithm::Annealing));
        pass &= st >= sa;
        parts.push(format!(
            "m={m}: median S synteam {st:.5} vs annealing {sa:.5}"
        ));
    }
    (
        Outcome {
            pass,
            detail: parts.join("; "),
        },
        report.results,
    )
}

fn traces(results: &[ExperimentResult]) -> Outcome {
    let mut non_monotone = 0;
    let mut exact_mismatch = 0;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in results {
        *counts.entry(r.algorithm.id()).or_default() += 1;
        if !r.trace.is_monotone() || r.trace.is_empty() {
            non_monotone += 1;
        }
        if r.algorithm == Algorithm::Exact {
            let last = r.trace.last().unwrap().best;
            if last.value != r.best_s || last.log_value != r.best_log_s {
                exact_mismatch += 1;
            }
        }
    }
    Outcome {
        pass: non_monotone == 0 && exact_mismatch == 0,
        detail: format!(
            "runs {counts:?}: {non_monotone} non-monotone traces, {exact_mismatch} exact traces not ending at the optimum"
        ),
    }
}

fn annealing_schedule() -> Outcome {
    let mut worst: f64 = 0.0;
    for t_max in [0.001, 0.5, 1.0, 7.0, 60.0, 1e4] {
        for budget in [
            Budget::Time(Duration::from_secs_f64(t_max)),
            Budget::Iterations((t_max * 1000.0).ceil() as u64),
        ] {
            let p = SAParams::new(budget, 0);
            let x_end = budget.amount();
            let start = acceptance_probability(p.delta_ref, temperature(0.0, &p));
            let end = acceptance_probability(p.delta_ref, temperature(x_end, &p));
            worst = worst.max((start - 0.9).abs()).max((end - 0.1).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("max deviation from 0.9 / 0.1 anchors: {worst:.2e}"),
    }
}

fn formula_invariants() -> Outcome {
    let mut rng = rng_from_seed(7);
    let config = EvalConfig::default();
    let library = task_library();
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |what| *failures.entry(what).or_default() += 1;
    let competences: Vec<String> = teamcomp::bench::GARDNER_COMPETENCES
        .iter()
        .map(|c| c.to_string())
        .collect();
    for case in 0..10_000 {
        let k = rng.gen_range(2..=6);
        let students: Vec<Student> = (0..k)
            .map(|i| random_student(&mut rng, format!("s{i}"), &competences))
            .collect();
        let roster = Roster::new(students.clone()).unwrap();
        let team = Team::new((0..k).collect()).unwrap();

        // swapping every gender leaves the gender term and congeniality unchanged
        let flipped = Roster::new(
            students
                .iter()
                .map(|s| Student {
                    gender: match s.gender {
                        Gender::Man => Gender::Woman,
                        Gender::Woman => Gender::Man,
                    },
                    ..s.clone()
                })
                .collect(),
        )
        .unwrap();
        if (u_gender(&team, &roster, config.gamma) - u_gender(&team, &flipped, config.gamma)).abs()
            > 1e-12
            || (congeniality(&team, &roster, &config) - congeniality(&team, &flipped, &config))
                .abs()
                > 1e-12
        {
            fail("gender symmetry");
        }

        // clones have no spread in SN or TF
        let clone = Roster::new(
            (0..k)
                .map(|i| Student {
                    id: format!("c{i}"),
                    ..students[0].clone()
                })
                .collect(),
        )
        .unwrap();
        if u_sntf(&team, &clone) != 0.0 {
            fail("clone sigma product");
        }

        // a (k, 1, 1, 1) member maxes out the ETJ term
        let mut etj = students.clone();
        etj[0].profile = PersonalityProfile::new(rng.gen_range(-1.0..=1.0), 1.0, 1.0, 1.0);
        let etj = Roster::new(etj).unwrap();
        if (u_etj(&team, &etj, config.alpha) - 3.0 * config.alpha).abs() > 1e-15 {
            fail("u_etj = 3 alpha");
        }

        // lambda endpoints
        let tt = &library[case % library.len()];
        for (lambda, pick) in [(1.0, 0usize), (0.0, 1)] {
            let task = Task::new(tt.with_lambda(lambda).unwrap(), 2).unwrap();
            let rec = synergistic_value(&team, &roster, &task, &config).unwrap();
            let want = if pick == 0 { rec.u_prof } else { rec.u_con };
            if rec.s != want || combine(lambda, rec.u_prof, rec.u_con) != want {
                fail("lambda endpoints");
            }
        }

        // product and log-sum pick the same partition
        if case % 10 == 0 {
            let n = rng.gen_range(6..=12);
            let m = rng.gen_range(2..=3);
            let roster = synthetic_roster(n, case as u64, 0.5);
            let task = Task::new(tt.with_lambda(rng.gen_range(0.0..=1.0)).unwrap(), m).unwrap();
            let eval = Evaluator::new(&roster, &task, &config).unwrap();
            let dist = quantity_distribution(n, m).unwrap();
            let scores: Vec<_> = (0..8)
                .map(|_| eval.score(&random_partition(n, &dist, &mut rng)))
                .collect();
            let by_value = (0..8).max_by(|&a, &b| scores[a].value.total_cmp(&scores[b].value));
            let by_log =
                (0..8).max_by(|&a, &b| scores[a].log_value.total_cmp(&scores[b].log_value));
            let (a, b) = (by_value.unwrap(), by_log.unwrap());
            if a != b && !close(scores[a].value, scores[b].value, 1e-12) {
                fail("log/linear argmax");
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("10000 cases, failures {failures:?}"),
    }
}

fn exact_time_grows_with_m() -> Outcome {
    let config = EvalConfig::default();
    let library = task_library();
    let mut medians = Vec::new();
    for m in [2, 4] {
        let mut times: Vec<f64> = (0..10u64)
            .map(|seed| {
                let roster = synthetic_roster(24, 500 + seed, 0.5);
                let tt = library[seed as usize % library.len()]
                    .with_lambda(0.8)
                    .unwrap();
                let task = Task::new(tt, m).unwrap();
                let start = Instant::now();
                let sol = solve_exact(&roster, &task, &config, &ExactOptions::default()).unwrap();
                assert!(sol.optimal);
                start.elapsed().as_secs_f64()
            })
            .collect();
        medians.push(median(&mut times));
    }
    Outcome {
        pass: medians[1] > medians[0],
        detail: format!(
            "median wall time at n=24: m=2 {:.4}s, m=4 {:.4}s",
            medians[0], medians[1]
        ),
    }
}

fn main() {
    let mut all = true;
    let secs = Duration::from_secs;

    let t = Instant::now();
    all &= report(
        1,
        "exact vs brute force",
        t,
        Some(secs(120)),
        exact_vs_brute_force(),
    );

    let t = Instant::now();
    all &= report(
        2,
        "assignment vs brute force",
        t,
        Some(secs(30)),
        assignment_vs_brute_force(),
    );

    let t = Instant::now();
    let grid = quality_grid();
    all &= report(3, "quality ratio", t, Some(secs(600)), quality_ratio(&grid));

    let t = Instant::now();
    let (outcome, sa_runs) = synteam_vs_annealing();
    all &= report(4, "synteam vs annealing", t, None, outcome);

    let t = Instant::now();
    let mut runs = grid;
    runs.extend(sa_runs);
    all &= report(5, "anytime traces", t, None, traces(&runs));

    let t = Instant::now();
    all &= report(6, "annealing schedule", t, None, annealing_schedule());

    let t = Instant::now();
    all &= report(
        7,
        "formula invariants",
        t,
        Some(secs(60)),
        formula_invariants(),
    );

    let t = Instant::now();
    all &= report(8, "exact time vs m", t, None, exact_time_grows_with_m());

    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if !all && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
