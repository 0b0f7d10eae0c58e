//! Anneal a synthetic instance under an iteration budget and show the trace.
//!
//! Usage: `cargo run --release --example simulated_annealing -- [n] [m] [iterations]`

use teamcomp::anneal::{run_sa, temperature, Budget, SAParams};
use teamcomp::bench::{synthetic_roster, task_library};
use teamcomp::{EvalConfig, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(20) as usize;
    let m = args.get(1).copied().unwrap_or(4) as usize;
    let iterations = args.get(2).copied().unwrap_or(20_000);

    let roster = synthetic_roster(n, 11, 0.5);
    let task = Task::new(task_library()[0].clone(), m)?;
    let params = SAParams::new(Budget::Iterations(iterations), 11);
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let x = frac * iterations as f64;
        println!("T({x:>8.0}) = {:.6}", temperature(x, &params));
    }

    let (sol, stats) = run_sa(&roster, &task, &EvalConfig::default(), &params)?;
    println!(
        "{} proposals, {} accepted, {} of them worsening",
        stats.proposals, stats.accepted, stats.accepted_worse
    );
    for p in sol.trace.points() {
        println!("  t={:.5}s S={:.6}", p.elapsed_s, p.best.value);
    }
    println!("final S = {:.6}", sol.score.value);
    Ok(())
}
