//! Synergistic team composition.
//!
//! Partition a roster of students into teams of size `m` or `m + 1` so that
//! the product of the teams' synergistic values is maximal. A team's value
//! blends its proficiency for a task (how closely the best balanced
//! competence assignment matches the required levels) with its congeniality
//! (personality diversity, extrovert/introvert presence and gender balance).
//!
//! Solvers:
//! - [`exact::solve_exact`] enumerates every feasible team and runs a
//!   branch-and-bound over the set-partitioning master problem.
//! - [`synteam::run_synteam`] is an anytime local search with a two-team
//!   optimal redistribution move and a first-improvement swap move.
//! - [`anneal::run_sa`] is a simulated-annealing baseline with an
//!   exponential cooling schedule.
//!
//! [`bench`] generates synthetic instances and runs experiment grids;
//! [`io`] reads and writes rosters, tasks, partitions and CSV results.

pub mod anneal;
pub mod assignment;
pub mod bench;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod exact;
pub mod io;
pub mod model;
pub mod synteam;
pub mod trace;

pub use error::{Error, Result};
pub use evaluation::{Evaluator, PartitionScore, SynergyRecord};
pub use model::{
    quantity_distribution, EvalConfig, Gender, Partition, PersonalityProfile, Requirement, Roster,
    SizeDistribution, Student, Task, TaskType, Team,
};
pub use trace::AnytimeTrace;

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub partition: Partition,
    pub score: PartitionScore,
    pub trace: AnytimeTrace,
}
