//! Solve synthetic instances to optimality and report the search effort.
//!
//! Usage: `cargo run --release --example exact_solver -- [n] [m] [seeds]`

use teamcomp::bench::{synthetic_roster, task_library};
use teamcomp::exact::{solve_exact, ExactOptions};
use teamcomp::{EvalConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(12);
    let m = args.get(1).copied().unwrap_or(3);
    let seeds = args.get(2).copied().unwrap_or(3) as u64;

    let config = EvalConfig::default();
    for tt in task_library() {
        for lambda in [0.2, 0.8] {
            let task = Task::new(tt.with_lambda(lambda)?, m)?;
            for seed in 0..seeds {
                let roster = synthetic_roster(n, seed, 0.5);
                let sol = solve_exact(&roster, &task, &config, &ExactOptions::default())?;
                println!(
                    "{:<13} λ={lambda} seed={seed}: S={:.6} teams={} nodes={} gen={:.3}s search={:.3}s",
                    tt.name,
                    sol.solution.score.value,
                    sol.team_count,
                    sol.nodes,
                    sol.gen_time_s,
                    sol.solve_time_s,
                );
            }
        }
    }
    Ok(())
}
