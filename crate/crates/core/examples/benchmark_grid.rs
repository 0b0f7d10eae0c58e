//! A small experiment grid with per-cell quality ratios.

use teamcomp::bench::{quality_ratio_summary, run_matrix, task_library, Algorithm, Grid};

fn main() {
    let grid = Grid {
        n_values: vec![12, 16],
        m_values: vec![3, 4],
        lambdas: vec![0.8],
        tasks: task_library(),
        repeats: 3,
        ..Grid::default()
    };
    let algorithms = [Algorithm::Exact, Algorithm::SynTeam, Algorithm::Annealing];
    let report = run_matrix(&grid, &algorithms);
    for f in &report.failures {
        println!("failed: {f:?}");
    }
    let summary = quality_ratio_summary(&report.results).expect("exact baseline present");
    for s in summary {
        println!(
            "{:<9} m={} λ={} {:<13} min {:.4} median {:.4} over {} runs",
            s.algorithm.id(),
            s.m,
            s.lambda,
            s.task.as_deref().unwrap_or("-"),
            s.min,
            s.median,
            s.count
        );
    }
}
