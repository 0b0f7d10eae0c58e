//! Run SynTeam on a synthetic roster and compare it with the exact optimum.
//!
//! Usage: `cargo run --release --example synteam_heuristic -- [n] [m] [seeds]`

use std::time::Instant;

use teamcomp::bench::{synthetic_roster, task_library};
use teamcomp::exact::{solve_exact, ExactOptions};
use teamcomp::synteam::{run_synteam, SynTeamParams};
use teamcomp::{EvalConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(16);
    let m = args.get(1).copied().unwrap_or(3);
    let seeds = args.get(2).copied().unwrap_or(5) as u64;
    let config = EvalConfig::default();

    for lambda in [0.2, 0.8] {
        let mut worst: f64 = 1.0;
        for seed in 0..seeds {
            let tt = &task_library()[seed as usize % 4];
            let task = Task::new(tt.with_lambda(lambda)?, m)?;
            let roster = synthetic_roster(n, seed, 0.5);
            let start = Instant::now();
            let params = SynTeamParams::for_instance(n, m, seed)?;
            let (sol, stats) = run_synteam(&roster, &task, &config, &params)?;
            let heuristic_time = start.elapsed().as_secs_f64();
            let exact = solve_exact(&roster, &task, &config, &ExactOptions::default())?;
            let ratio = (sol.score.log_value - exact.solution.score.log_value).exp();
            worst = worst.min(ratio);
            println!(
                "λ={lambda} seed={seed} {:<13} ratio={ratio:.4} synteam={heuristic_time:.4}s ({} iterations) exact={:.3}s",
                tt.name,
                stats.iterations,
                exact.gen_time_s + exact.solve_time_s,
            );
        }
        println!("λ={lambda}: worst ratio {worst:.4}");
    }
    Ok(())
}
