//! Cross-module invariants checked on random instances.

use proptest::prelude::*;
use teamcomp::anneal::{run_sa, Budget, SAParams};
use teamcomp::bench::{synthetic_roster, task_library};
use teamcomp::exact::{brute_force_partitions, solve_exact, ExactOptions};
use teamcomp::io::{
    parse_roster_csv, read_partition, rescore, write_partition, write_roster_csv, PartitionFile,
};
use teamcomp::synteam::{run_synteam, SynTeamParams};
use teamcomp::{quantity_distribution, EvalConfig, Evaluator, Task};

/// Feasible (n, m) pairs small enough for exhaustive enumeration.
fn small_instance() -> impl Strategy<Value = (usize, usize, usize, f64, u64)> {
    (
        4usize..=10,
        2usize..=4,
        0usize..4,
        0.0f64..=1.0,
        any::<u64>(),
    )
        .prop_filter("feasible sizes", |&(n, m, ..)| {
            quantity_distribution(n, m).is_ok()
        })
}

fn task(t: usize, lambda: f64, m: usize) -> Task {
    Task::new(task_library()[t].with_lambda(lambda).unwrap(), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn size_distribution_covers_everyone(n in 2usize..200, m in 2usize..12) {
        match quantity_distribution(n, m) {
            Ok(d) => {
                prop_assert_eq!(d.student_count(), n);
                prop_assert_eq!(d.team_count(), n / m);
                prop_assert!(d.sizes().iter().all(|&s| s == m || s == m + 1));
            }
            Err(_) => prop_assert!(n % m > n / m),
        }
    }

    #[test]
    fn exact_matches_enumeration((n, m, t, lambda, seed) in small_instance()) {
        let roster = synthetic_roster(n, seed, 0.5);
        let task = task(t, lambda, m);
        let config = EvalConfig::default();
        let exact = solve_exact(&roster, &task, &config, &ExactOptions::default()).unwrap();
        let (_, brute) = brute_force_partitions(&roster, &task, &config).unwrap();
        prop_assert!(exact.optimal);
        prop_assert!((exact.solution.score.log_value - brute.log_value).abs() <= 1e-9);
        exact.solution.partition.validate(n, m).unwrap();
    }

    #[test]
    fn heuristics_never_beat_the_optimum((n, m, t, lambda, seed) in small_instance()) {
        let roster = synthetic_roster(n, seed, 0.5);
        let task = task(t, lambda, m);
        let config = EvalConfig::default();
        let exact = solve_exact(&roster, &task, &config, &ExactOptions::default()).unwrap();
        let opt = exact.solution.score.log_value;

        let params = SynTeamParams::for_instance(n, m, seed).unwrap();
        let (st, _) = run_synteam(&roster, &task, &config, &params).unwrap();
        st.partition.validate(n, m).unwrap();
        prop_assert!(st.score.log_value <= opt + 1e-9);
        prop_assert!(st.trace.is_monotone());

        let (sa, _) = run_sa(&roster, &task, &config, &SAParams::new(Budget::Iterations(500), seed)).unwrap();
        sa.partition.validate(n, m).unwrap();
        prop_assert!(sa.score.log_value <= opt + 1e-9);
        prop_assert!(sa.trace.is_monotone());
    }

    #[test]
    fn files_round_trip(n in 4usize..30, seed in any::<u64>(), t in 0usize..4) {
        let roster = synthetic_roster(n, seed, 0.4);
        let mut csv = Vec::new();
        write_roster_csv(&roster, &mut csv).unwrap();
        let back = parse_roster_csv(std::str::from_utf8(&csv).unwrap(), "r.csv").unwrap();
        prop_assert_eq!(&back, &roster);

        let m = 2 + (seed % 3) as usize;
        prop_assume!(quantity_distribution(n, m).is_ok());
        let task = task(t, 0.5, m);
        let config = EvalConfig::default();
        let eval = Evaluator::new(&roster, &task, &config).unwrap();
        let params = SynTeamParams::for_instance(n, m, seed).unwrap();
        let (sol, _) = run_synteam(&roster, &task, &config, &params).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        write_partition(&path, &PartitionFile::build(&sol.partition, &eval)).unwrap();
        let file = read_partition(&path).unwrap();
        let report = rescore(&file, &eval, 1e-12).unwrap();
        prop_assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
        prop_assert_eq!(file.resolve(&roster, &task).unwrap().0.canonical(), sol.partition.canonical());
    }
}
