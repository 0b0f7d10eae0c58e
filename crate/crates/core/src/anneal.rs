//! Simulated-annealing baseline.
//!
//! Each step swaps two random students from two different teams. Moves that
//! keep or improve the objective are always accepted; a worsening move with
//! relative loss `Δ = (S − S') / S` is accepted with probability `exp(−Δ/T)`.
//!
//! The temperature decays exponentially, `T(x) = r^x · τ_max`, with `τ_max`
//! chosen so that a loss of `delta_ref` is accepted with probability
//! `p_start` at the start, and `r` so that the same loss is accepted with
//! probability `p_end` when the budget runs out.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{floored_ln, CachedEvaluator, Evaluator, PartitionScore};
use crate::model::{quantity_distribution, EvalConfig, Roster, Task, Team};
use crate::synteam::{random_partition, rng_from_seed};
use crate::trace::{AnytimeTrace, Clock};
use crate::Solution;

/// What the schedule's clock `x` counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Budget {
    /// Wall-clock seconds.
    Time(Duration),
    /// Proposed moves. Runs are then fully reproducible from the seed.
    Iterations(u64),
}

impl Budget {
    pub fn amount(&self) -> f64 {
        match *self {
            Budget::Time(d) => d.as_secs_f64(),
            Budget::Iterations(k) => k as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SAParams {
    pub budget: Budget,
    /// Reference relative loss used to calibrate the schedule.
    pub delta_ref: f64,
    pub p_start: f64,
    pub p_end: f64,
    pub seed: u64,
}

impl SAParams {
    pub fn new(budget: Budget, seed: u64) -> Self {
        Self {
            budget,
            delta_ref: 0.01,
            p_start: 0.9,
            p_end: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta_ref > 0.0
            && 0.0 < self.p_end
            && self.p_end < self.p_start
            && self.p_start < 1.0
            && self.budget.amount() > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "annealing needs delta_ref > 0, 0 < p_end < p_start < 1 and a positive budget, got {self:?}"
            )))
        }
    }

    /// Initial temperature `−δ / ln(p_start)`.
    pub fn tau_max(&self) -> f64 {
        -self.delta_ref / self.p_start.ln()
    }

    /// Per-unit decay `(δ / (ln(1/p_end) · τ_max))^(1/t_max)`.
    pub fn decay(&self) -> f64 {
        self.log_decay().exp()
    }

    /// `ln r`, kept in log space so short budgets do not underflow `r`.
    pub fn log_decay(&self) -> f64 {
        let t_max = self.budget.amount();
        (self.delta_ref / ((1.0 / self.p_end).ln() * self.tau_max())).ln() / t_max
    }
}

/// Temperature after `x` units of the budget.
pub fn temperature(x: f64, params: &SAParams) -> f64 {
    (params.log_decay() * x).exp() * params.tau_max()
}

/// Probability of accepting a move that loses `delta` (relative) at temperature `t`.
pub fn acceptance_probability(delta: f64, t: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / t).exp()
    }
}

/// Relative loss of going from `current` to `candidate`; zero when not worse.
///
/// A worsening move away from a zero-valued state has infinite loss.
pub fn relative_loss(current: &PartitionScore, candidate: &PartitionScore) -> f64 {
    if candidate.log_value >= current.log_value {
        return 0.0;
    }
    if current.value == 0.0 {
        return f64::INFINITY;
    }
    // 1 − S'/S, computed in the log domain to avoid underflow
    -(candidate.log_value - current.log_value).exp_m1()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SAStats {
    pub proposals: u64,
    pub accepted: u64,
    pub accepted_worse: u64,
}

pub fn run_sa(
    roster: &Roster,
    task: &Task,
    config: &EvalConfig,
    params: &SAParams,
) -> Result<(Solution, SAStats)> {
    let eval = Evaluator::new(roster, task, config)?;
    run_sa_with(&eval, params)
}

pub fn run_sa_with(eval: &Evaluator<'_>, params: &SAParams) -> Result<(Solution, SAStats)> {
    params.validate()?;
    let clock = Clock::start();
    let n = eval.roster().len();
    let distribution = quantity_distribution(n, eval.task().m)?;
    let floor = eval.floor();
    let mut rng = rng_from_seed(params.seed);
    let mut scorer = CachedEvaluator::new(eval);
    let mut stats = SAStats::default();

    let mut current = random_partition(n, &distribution, &mut rng);
    let mut values: Vec<f64> = current
        .teams()
        .iter()
        .map(|t| scorer.value(t.members()))
        .collect();
    let mut score = PartitionScore::from_values(values.iter().copied(), floor);
    let mut best = (current.clone(), score);
    let mut trace = AnytimeTrace::new();
    trace.record(clock.elapsed(), score);

    let b = current.teams().len();
    if b < 2 {
        return Ok((
            Solution {
                partition: current,
                score,
                trace,
            },
            stats,
        ));
    }
    let t_max = params.budget.amount();
    let tau_max = params.tau_max();
    let decay_ln = params.log_decay();

    loop {
        let x = match params.budget {
            Budget::Time(_) => clock.elapsed(),
            Budget::Iterations(_) => stats.proposals as f64,
        };
        if x >= t_max {
            break;
        }
        stats.proposals += 1;
        let i = rng.gen_range(0..b);
        let mut j = rng.gen_range(0..b - 1);
        if j >= i {
            j += 1;
        }
        let ti = &current.teams()[i];
        let tj = &current.teams()[j];
        let a = ti.members()[rng.gen_range(0..ti.len())];
        let c = tj.members()[rng.gen_range(0..tj.len())];
        let new_i = replace(ti, a, c);
        let new_j = replace(tj, c, a);
        let (vi, vj) = (scorer.value(&new_i), scorer.value(&new_j));

        let log_value =
            score.log_value - floored_ln(values[i], floor) - floored_ln(values[j], floor)
                + floored_ln(vi, floor)
                + floored_ln(vj, floor);
        let value = if values[i] == 0.0 || values[j] == 0.0 {
            values
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    if k == i {
                        vi
                    } else if k == j {
                        vj
                    } else {
                        v
                    }
                })
                .product()
        } else {
            score.value / values[i] / values[j] * vi * vj
        };
        let candidate = PartitionScore { value, log_value };

        let accept = if candidate.log_value >= score.log_value {
            true
        } else {
            let delta = relative_loss(&score, &candidate);
            let temp = (decay_ln * x).exp() * tau_max;
            let take = rng.gen::<f64>() < acceptance_probability(delta, temp);
            if take {
                stats.accepted_worse += 1;
            }
            take
        };
        if accept {
            stats.accepted += 1;
            let teams = current.teams_mut();
            teams[i] = Team::from_sorted(new_i);
            teams[j] = Team::from_sorted(new_j);
            values[i] = vi;
            values[j] = vj;
            score = candidate;
            if score.log_value > best.1.log_value {
                // resync to avoid drift from incremental updates
                score = PartitionScore::from_values(values.iter().copied(), floor);
                if trace.record(clock.elapsed(), score) {
                    best = (current.clone(), score);
                }
            }
        }
    }
    Ok((
        Solution {
            partition: best.0,
            score: best.1,
            trace,
        },
        stats,
    ))
}

fn replace(team: &Team, out: usize, inn: usize) -> Vec<usize> {
    let mut v: Vec<usize> = team
        .members()
        .iter()
        .map(|&s| if s == out { inn } else { s })
        .collect();
    v.sort_unstable();
    v
}
