//! SynTeam: anytime local search over size-constrained partitions.
//!
//! Starts from a random partition and repeatedly picks two teams at random,
//! redistributing their members in the best possible way. After `n_l`
//! non-improving iterations a finer move scans single-student swaps in
//! (team, member) order and takes the first one that improves. The search
//! stops after `n_r` consecutive non-improving iterations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{CachedEvaluator, Evaluator, PartitionScore};
use crate::model::{
    quantity_distribution, EvalConfig, Partition, Roster, SizeDistribution, Task, Team,
};
use crate::trace::{AnytimeTrace, Clock};
use crate::Solution;

/// Minimum log-objective gain that counts as an improvement.
pub const IMPROVE_TOL: f64 = 1e-12;

/// Generator used by every randomized solver. Its stream is stable across
/// platforms, so seeded runs are reproducible.
pub type SolverRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynTeamParams {
    /// Maximum number of consecutive non-improving iterations.
    pub n_r: usize,
    /// Non-improving iterations before the swap move is tried.
    pub n_l: usize,
    pub seed: u64,
}

impl SynTeamParams {
    /// `n_r = ceil(1.5·b)` and `n_l = max(1, floor(n_r / 6))` for `b` teams.
    pub fn for_team_count(b: usize, seed: u64) -> Self {
        let n_r = (3 * b).div_ceil(2).max(1);
        Self {
            n_r,
            n_l: (n_r / 6).max(1),
            seed,
        }
    }

    pub fn for_instance(n: usize, m: usize, seed: u64) -> Result<Self> {
        Ok(Self::for_team_count(
            quantity_distribution(n, m)?.team_count(),
            seed,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 || self.n_l == 0 || self.n_l > self.n_r {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_l <= n_r, got n_l = {}, n_r = {}",
                self.n_l, self.n_r
            )));
        }
        Ok(())
    }
}

/// Shuffles the students and cuts them into consecutive teams of the given sizes.
pub fn random_partition(
    n: usize,
    distribution: &SizeDistribution,
    rng: &mut impl Rng,
) -> Partition {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut teams = Vec::with_capacity(distribution.team_count());
    let mut start = 0;
    for size in distribution.sizes() {
        let mut members = order[start..start + size].to_vec();
        members.sort_unstable();
        teams.push(Team::from_sorted(members));
        start += size;
    }
    Partition::new(teams)
}

/// A neighbouring solution and its objective.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub partition: Partition,
    pub score: PartitionScore,
}

/// Result of the two-team move.
#[derive(Debug, Clone)]
pub struct Redistribution {
    pub candidate: Candidate,
    /// Indices of the two teams that were redistributed.
    pub teams: (usize, usize),
    /// Number of distinct splits evaluated.
    pub splits: usize,
}

/// Best split of the members of teams `a` and `b` into two teams of the same sizes.
///
/// Returns the two new teams (sizes matching `a`, `b`), the best log value and
/// the number of splits examined. When the sizes are equal, mirrored splits
/// are skipped by keeping the union's first member on side `a`.
pub fn best_split(
    a: &Team,
    b: &Team,
    scorer: &mut CachedEvaluator<'_, '_>,
) -> (Team, Team, f64, usize) {
    let mut union: Vec<usize> = a.members().iter().chain(b.members()).copied().collect();
    union.sort_unstable();
    let (size_a, total) = (a.len(), union.len());
    let pinned = a.len() == b.len();
    let mut best: Option<(Vec<usize>, Vec<usize>, f64)> = None;
    let mut splits = 0;
    // choose positions for side a
    let mut pick: Vec<usize> = (0..size_a).collect();
    let mut in_a = vec![false; total];
    loop {
        if !pinned || pick[0] == 0 {
            splits += 1;
            in_a.iter_mut().for_each(|x| *x = false);
            for &p in &pick {
                in_a[p] = true;
            }
            let side_a: Vec<usize> = pick.iter().map(|&p| union[p]).collect();
            let side_b: Vec<usize> = (0..total).filter(|&p| !in_a[p]).map(|p| union[p]).collect();
            let log = scorer.log_value(&side_a) + scorer.log_value(&side_b);
            if best.as_ref().is_none_or(|&(_, _, v)| log > v) {
                best = Some((side_a, side_b, log));
            }
        } else {
            break;
        }
        let Some(i) = (0..size_a).rev().find(|&i| pick[i] < i + total - size_a) else {
            break;
        };
        pick[i] += 1;
        for j in i + 1..size_a {
            pick[j] = pick[j - 1] + 1;
        }
    }
    let (x, y, log) = best.expect("at least one split");
    (Team::from_sorted(x), Team::from_sorted(y), log, splits)
}

/// First neighbourhood: pick two distinct teams uniformly at random and
/// redistribute their members optimally.
pub fn two_team_redistribution(
    partition: &Partition,
    scorer: &mut CachedEvaluator<'_, '_>,
    rng: &mut impl Rng,
) -> Option<Redistribution> {
    let b = partition.teams().len();
    if b < 2 {
        return None;
    }
    let i = rng.gen_range(0..b);
    let mut j = rng.gen_range(0..b - 1);
    if j >= i {
        j += 1;
    }
    let (x, y, _, splits) = best_split(&partition.teams()[i], &partition.teams()[j], scorer);
    let mut next = partition.clone();
    next.teams_mut()[i] = x;
    next.teams_mut()[j] = y;
    let score = scorer.score(&next);
    Some(Redistribution {
        candidate: Candidate {
            partition: next,
            score,
        },
        teams: (i, j),
        splits,
    })
}

fn swapped(team: &Team, out: usize, inn: usize) -> Vec<usize> {
    let mut v: Vec<usize> = team
        .members()
        .iter()
        .map(|&s| if s == out { inn } else { s })
        .collect();
    v.sort_unstable();
    v
}

/// Second neighbourhood: the first student swap between two teams that
/// strictly improves the objective, scanning teams and their members in
/// ascending order.
pub fn improving_swap(
    partition: &Partition,
    scorer: &mut CachedEvaluator<'_, '_>,
) -> Option<Candidate> {
    let teams = partition.teams();
    let logs: Vec<f64> = teams
        .iter()
        .map(|t| scorer.log_value(t.members()))
        .collect();
    for ti in 0..teams.len() {
        for &a in teams[ti].members() {
            for tj in ti + 1..teams.len() {
                for &b in teams[tj].members() {
                    let new_i = swapped(&teams[ti], a, b);
                    let new_j = swapped(&teams[tj], b, a);
                    let gain =
                        scorer.log_value(&new_i) + scorer.log_value(&new_j) - logs[ti] - logs[tj];
                    if gain > IMPROVE_TOL {
                        let mut next = partition.clone();
                        next.teams_mut()[ti] = Team::from_sorted(new_i);
                        next.teams_mut()[tj] = Team::from_sorted(new_j);
                        let score = scorer.score(&next);
                        return Some(Candidate {
                            partition: next,
                            score,
                        });
                    }
                }
            }
        }
    }
    None
}

/// Counters and move statistics of a SynTeam run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynTeamStats {
    pub iterations: usize,
    pub improvements: usize,
    pub swap_scans: usize,
}

pub fn run_synteam(
    roster: &Roster,
    task: &Task,
    config: &EvalConfig,
    params: &SynTeamParams,
) -> Result<(Solution, SynTeamStats)> {
    params.validate()?;
    let eval = Evaluator::new(roster, task, config)?;
    run_synteam_with(&eval, params)
}

/// SynTeam on a prepared evaluator.
pub fn run_synteam_with(
    eval: &Evaluator<'_>,
    params: &SynTeamParams,
) -> Result<(Solution, SynTeamStats)> {
    let clock = Clock::start();
    let n = eval.roster().len();
    let distribution = quantity_distribution(n, eval.task().m)?;
    let mut rng = rng_from_seed(params.seed);
    let mut scorer = CachedEvaluator::new(eval);
    let mut stats = SynTeamStats::default();

    let mut current = random_partition(n, &distribution, &mut rng);
    let mut score = scorer.score(&current);
    let mut trace = AnytimeTrace::new();
    trace.record(clock.elapsed(), score);

    if distribution.team_count() >= 2 {
        let (mut c_r, mut c_l) = (1usize, 1usize);
        while c_r <= params.n_r {
            stats.iterations += 1;
            let mut candidate = two_team_redistribution(&current, &mut scorer, &mut rng)
                .expect("at least two teams")
                .candidate;
            if candidate.score.log_value <= score.log_value + IMPROVE_TOL && c_l == params.n_l {
                stats.swap_scans += 1;
                if let Some(swap) = improving_swap(&current, &mut scorer) {
                    candidate = swap;
                }
                c_l = 1;
            }
            if candidate.score.log_value > score.log_value + IMPROVE_TOL {
                current = candidate.partition;
                score = candidate.score;
                trace.record(clock.elapsed(), score);
                stats.improvements += 1;
                c_r = 1;
                c_l = 1;
            } else {
                c_r += 1;
                c_l += 1;
            }
        }
    }
    Ok((
        Solution {
            partition: current,
            score,
            trace,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{synthetic_roster, task_library};
    use crate::exact::brute_force_partitions;

    fn setup(n: usize, m: usize, seed: u64, lambda: f64) -> (Roster, Task) {
        let roster = synthetic_roster(n, seed, 0.5);
        let tt = task_library()[seed as usize % 4]
            .with_lambda(lambda)
            .unwrap();
        (roster, Task::new(tt, m).unwrap())
    }

    #[test]
    fn default_params() {
        assert_eq!(
            SynTeamParams::for_team_count(2, 0),
            SynTeamParams {
                n_r: 3,
                n_l: 1,
                seed: 0
            }
        );
        assert_eq!(
            SynTeamParams::for_team_count(12, 0),
            SynTeamParams {
                n_r: 18,
                n_l: 3,
                seed: 0
            }
        );
        assert_eq!(SynTeamParams::for_team_count(5, 0).n_r, 8);
        assert_eq!(SynTeamParams::for_team_count(1, 0).n_r, 2);
    }

    #[test]
    fn random_partition_is_reproducible_and_sized() {
        let d = quantity_distribution(11, 3).unwrap();
        let a = random_partition(11, &d, &mut rng_from_seed(4));
        let b = random_partition(11, &d, &mut rng_from_seed(4));
        assert_eq!(a, b);
        a.validate(11, 3).unwrap();
        let mut sizes: Vec<usize> = a.teams().iter().map(Team::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 4, 4]);
    }

    #[test]
    fn random_partition_is_uniform_over_matchings() {
        let d = quantity_distribution(4, 2).unwrap();
        let mut rng = rng_from_seed(123);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..10_000 {
            let p = random_partition(4, &d, &mut rng).canonical();
            *counts.entry(p).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        for &c in counts.values() {
            assert!((c as f64 / 10_000.0 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn split_counts() {
        let (roster, task) = setup(11, 5, 0, 0.8);
        let eval = Evaluator::new(&roster, &task, &EvalConfig::default()).unwrap();
        let mut scorer = CachedEvaluator::new(&eval);
        let a = Team::new(vec![0, 1, 2, 3, 4]).unwrap();
        let b = Team::new(vec![5, 6, 7, 8, 9]).unwrap();
        let c = Team::new(vec![5, 6, 7, 8, 9, 10]).unwrap();
        assert_eq!(best_split(&a, &b, &mut scorer).3, 126);
        assert_eq!(best_split(&a, &c, &mut scorer).3, 462);
        let (x, y, _, _) = best_split(&a, &c, &mut scorer);
        assert_eq!((x.len(), y.len()), (5, 6));
    }

    #[test]
    fn redistribution_never_worse_on_its_teams() {
        for seed in 0..20 {
            let (roster, task) = setup(12, 3, seed, 0.5);
            let eval = Evaluator::new(&roster, &task, &EvalConfig::default()).unwrap();
            let mut scorer = CachedEvaluator::new(&eval);
            let d = quantity_distribution(12, 3).unwrap();
            let mut rng = rng_from_seed(seed);
            let p = random_partition(12, &d, &mut rng);
            let before = scorer.score(&p);
            let r = two_team_redistribution(&p, &mut scorer, &mut rng).unwrap();
            assert!(r.candidate.score.log_value >= before.log_value - 1e-12);
            r.candidate.partition.validate(12, 3).unwrap();
            let (i, j) = r.teams;
            assert_ne!(i, j);
            // untouched teams stay put
            for k in (0..4).filter(|&k| k != i && k != j) {
                assert_eq!(p.teams()[k], r.candidate.partition.teams()[k]);
            }
        }
    }

    #[test]
    fn swap_finds_nothing_at_the_optimum() {
        for seed in 0..10 {
            let (roster, task) = setup(4, 2, seed, 0.8);
            let cfg = EvalConfig::default();
            let (opt, _) = brute_force_partitions(&roster, &task, &cfg).unwrap();
            let eval = Evaluator::new(&roster, &task, &cfg).unwrap();
            let mut scorer = CachedEvaluator::new(&eval);
            assert!(improving_swap(&opt, &mut scorer).is_none());
        }
    }

    #[test]
    fn swap_is_deterministic_and_improving() {
        let (roster, task) = setup(12, 3, 7, 0.5);
        let eval = Evaluator::new(&roster, &task, &EvalConfig::default()).unwrap();
        let d = quantity_distribution(12, 3).unwrap();
        let p = random_partition(12, &d, &mut rng_from_seed(1));
        let mut s1 = CachedEvaluator::new(&eval);
        let mut s2 = CachedEvaluator::new(&eval);
        let a = improving_swap(&p, &mut s1);
        let b = improving_swap(&p, &mut s2);
        assert_eq!(
            a.as_ref().map(|c| &c.partition),
            b.as_ref().map(|c| &c.partition)
        );
        if let Some(c) = a {
            assert!(c.score.log_value > s1.score(&p).log_value);
            c.partition.validate(12, 3).unwrap();
        }
    }

    #[test]
    fn identical_students_swap_is_skipped() {
        use crate::model::{Gender, PersonalityProfile, Student};
        let twin = |id: &str| Student {
            id: id.into(),
            gender: Gender::Man,
            profile: PersonalityProfile::new(0.2, 0.1, -0.3, 0.4),
            levels: [("linguistic".to_string(), 0.5)].into(),
        };
        let mut students = vec![twin("a"), twin("b")];
        students.push(Student {
            id: "c".into(),
            gender: Gender::Woman,
            profile: PersonalityProfile::new(-0.9, 0.8, 0.9, 0.9),
            levels: [("linguistic".to_string(), 0.9)].into(),
        });
        students.push(Student {
            id: "d".into(),
            gender: Gender::Woman,
            profile: PersonalityProfile::new(0.9, -0.8, -0.9, -0.9),
            levels: [("linguistic".to_string(), 0.1)].into(),
        });
        let roster = Roster::new(students).unwrap();
        let tt = crate::model::TaskType::new("t", 0.2, [("linguistic", 0.5, 1.0)]).unwrap();
        let task = Task::new(tt, 2).unwrap();
        let eval = Evaluator::new(&roster, &task, &EvalConfig::default()).unwrap();
        let mut scorer = CachedEvaluator::new(&eval);
        // a and b are interchangeable, so the first pair in scan order (a, b) never improves
        let p = Partition::new(vec![
            Team::new(vec![0, 2]).unwrap(),
            Team::new(vec![1, 3]).unwrap(),
        ]);
        let base = scorer.score(&p);
        let twins_swapped = Partition::new(vec![
            Team::new(vec![1, 2]).unwrap(),
            Team::new(vec![0, 3]).unwrap(),
        ]);
        assert_eq!(scorer.score(&twins_swapped), base);
        if let Some(c) = improving_swap(&p, &mut scorer) {
            assert_ne!(c.partition, twins_swapped);
            assert!(c.score.log_value > base.log_value);
        }
    }

    #[test]
    fn single_team_returns_initial() {
        let (roster, task) = setup(5, 5, 0, 0.5);
        let params = SynTeamParams::for_instance(5, 5, 0).unwrap();
        let (sol, stats) = run_synteam(&roster, &task, &EvalConfig::default(), &params).unwrap();
        assert_eq!(stats.iterations, 0);
        assert_eq!(sol.partition.teams().len(), 1);
        assert_eq!(sol.trace.len(), 1);
    }

    #[test]
    fn seeded_runs_reproduce() {
        let (roster, task) = setup(16, 4, 2, 0.8);
        let params = SynTeamParams::for_instance(16, 4, 99).unwrap();
        let cfg = EvalConfig::default();
        let (a, sa) = run_synteam(&roster, &task, &cfg, &params).unwrap();
        let (b, sb) = run_synteam(&roster, &task, &cfg, &params).unwrap();
        assert_eq!(a.partition, b.partition);
        assert_eq!(a.score, b.score);
        assert_eq!(sa, sb);
        assert!(a.trace.is_monotone());
        a.partition.validate(16, 4).unwrap();
    }

    #[test]
    fn rejects_bad_params() {
        let (roster, task) = setup(8, 2, 0, 0.5);
        let params = SynTeamParams {
            n_r: 2,
            n_l: 3,
            seed: 0,
        };
        assert!(run_synteam(&roster, &task, &EvalConfig::default(), &params).is_err());
    }
}
