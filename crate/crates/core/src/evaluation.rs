//! Team congeniality, synergistic value and the partition objective.
//!
//! A team's synergistic value is `s = λ·u_prof + (1 − λ)·u_con`. A partition
//! is scored by the product of its teams' values; solvers compare partitions
//! through the sum of logarithms, with values floored at `epsilon_floor` so
//! that zero-valued teams stay representable.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assignment::{
    self, level_cost, proficiency_from_levels, CompetenceAssignment, ProficiencyResult,
};
use crate::error::{Error, Result};
use crate::model::{EvalConfig, Gender, Partition, Roster, Task, Team};

/// Population standard deviation.
fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    // identical values are exactly zero spread, rounding in `mean` aside
    let first = values.clone().next().unwrap_or(mean);
    if values.clone().all(|v| v == first) {
        return 0.0;
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

/// Personality diversity: product of the SN and TF standard deviations.
pub fn u_sntf(team: &Team, roster: &Roster) -> f64 {
    let members = team.members().iter().map(|&i| roster.get(i).profile);
    std_dev(members.clone().map(|p| p.sn)) * std_dev(members.map(|p| p.tf))
}

/// Best extrovert-thinking-judging member: `max(0, max α·(tf + ei + pj))`.
pub fn u_etj(team: &Team, roster: &Roster, alpha: f64) -> f64 {
    team.members()
        .iter()
        .map(|&i| {
            let p = roster.get(i).profile;
            alpha * (p.tf + p.ei + p.pj)
        })
        .fold(0.0, f64::max)
}

/// Most introverted member: `max(0, max −β·ei)`.
pub fn u_introvert(team: &Team, roster: &Roster, beta: f64) -> f64 {
    team.members()
        .iter()
        .map(|&i| -beta * roster.get(i).profile.ei)
        .fold(0.0, f64::max)
}

/// `γ·sin(π·w / (w + m))` for `women` women and `men` men.
pub fn gender_balance(women: usize, men: usize, gamma: f64) -> f64 {
    let total = women + men;
    if total == 0 {
        return 0.0;
    }
    // sin(pi) is ~1.2e-16, not 0
    if women == 0 || men == 0 {
        return 0.0;
    }
    gamma * (PI * women as f64 / total as f64).sin()
}

pub fn u_gender(team: &Team, roster: &Roster, gamma: f64) -> f64 {
    let women = team
        .members()
        .iter()
        .filter(|&&i| roster.get(i).gender == Gender::Woman)
        .count();
    gender_balance(women, team.len() - women, gamma)
}

pub fn congeniality(team: &Team, roster: &Roster, config: &EvalConfig) -> f64 {
    u_sntf(team, roster)
        + u_etj(team, roster, config.alpha)
        + u_introvert(team, roster, config.beta)
        + u_gender(team, roster, config.gamma)
}

/// Per-team evaluation, with the competence assignment that witnesses `u_prof`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynergyRecord {
    pub team: Team,
    pub s: f64,
    pub u_prof: f64,
    pub u_con: f64,
    pub assignment: CompetenceAssignment,
}

pub fn combine(lambda: f64, u_prof: f64, u_con: f64) -> f64 {
    lambda * u_prof + (1.0 - lambda) * u_con
}

pub fn synergistic_value(
    team: &Team,
    roster: &Roster,
    task: &Task,
    config: &EvalConfig,
) -> Result<SynergyRecord> {
    let ProficiencyResult {
        assignment, u_prof, ..
    } = assignment::solve_balanced_assignment(team, &task.task_type, config.upsilon, roster)?;
    let u_con = congeniality(team, roster, config);
    Ok(SynergyRecord {
        team: team.clone(),
        s: combine(task.lambda(), u_prof, u_con),
        u_prof,
        u_con,
        assignment,
    })
}

/// Partition objective in both linear and log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionScore {
    /// Product of team values.
    pub value: f64,
    /// Sum of `ln(max(s, epsilon_floor))`.
    pub log_value: f64,
}

impl PartitionScore {
    pub fn from_values(values: impl IntoIterator<Item = f64>, floor: f64) -> Self {
        let (value, log_value) = values
            .into_iter()
            .fold((1.0, 0.0), |(v, l), s| (v * s, l + floored_ln(s, floor)));
        Self { value, log_value }
    }
}

pub fn floored_ln(s: f64, floor: f64) -> f64 {
    s.max(floor).ln()
}

pub fn partition_value(
    partition: &Partition,
    roster: &Roster,
    task: &Task,
    config: &EvalConfig,
) -> Result<PartitionScore> {
    partition.validate(roster.len(), task.m)?;
    let values = partition
        .teams()
        .iter()
        .map(|t| synergistic_value(t, roster, task, config).map(|r| r.s))
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionScore::from_values(values, config.epsilon_floor))
}

/// Precomputed per-student data for fast repeated team scoring.
///
/// Results agree with [`synergistic_value`]; the solvers go through this type
/// to avoid string lookups in their inner loops.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    roster: &'a Roster,
    task: &'a Task,
    config: EvalConfig,
    /// `costs[s * c + j]`: cost of student `s` on requirement `j`.
    costs: Vec<f64>,
    /// `levels[s * c + j]`: level of student `s` on requirement `j`.
    levels: Vec<f64>,
    women: Vec<bool>,
}

impl<'a> Evaluator<'a> {
    pub fn new(roster: &'a Roster, task: &'a Task, config: &EvalConfig) -> Result<Self> {
        config.validate()?;
        if task.task_type.requirements.is_empty() {
            return Err(Error::InvalidTask("no requirements".into()));
        }
        let reqs = &task.task_type.requirements;
        let mut costs = Vec::with_capacity(roster.len() * reqs.len());
        let mut levels = Vec::with_capacity(roster.len() * reqs.len());
        for s in roster.students() {
            for r in reqs {
                let l = s.level(&r.competence);
                levels.push(l);
                costs.push(level_cost(l, r, config.upsilon));
            }
        }
        Ok(Self {
            roster,
            task,
            config: *config,
            costs,
            levels,
            women: roster
                .students()
                .iter()
                .map(|s| s.gender == Gender::Woman)
                .collect(),
        })
    }

    pub fn roster(&self) -> &'a Roster {
        self.roster
    }

    pub fn task(&self) -> &'a Task {
        self.task
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    pub fn floor(&self) -> f64 {
        self.config.epsilon_floor
    }

    fn congeniality(&self, members: &[usize]) -> f64 {
        let profiles = members.iter().map(|&i| self.roster.get(i).profile);
        let sntf =
            std_dev(profiles.clone().map(|p| p.sn)) * std_dev(profiles.clone().map(|p| p.tf));
        let (mut etj, mut intro) = (0.0f64, 0.0f64);
        for p in profiles {
            etj = etj.max(self.config.alpha * (p.tf + p.ei + p.pj));
            intro = intro.max(-self.config.beta * p.ei);
        }
        let women = members.iter().filter(|&&i| self.women[i]).count();
        sntf + etj + intro + gender_balance(women, members.len() - women, self.config.gamma)
    }

    fn proficiency(&self, members: &[usize]) -> (Vec<usize>, f64) {
        let c = self.task.task_type.requirements.len();
        let mut costs = Vec::with_capacity(members.len() * c);
        for &i in members {
            costs.extend_from_slice(&self.costs[i * c..(i + 1) * c]);
        }
        let (local, _) = assignment::solve_costs(&costs, members.len(), c);
        let owners: Vec<usize> = local.iter().map(|&i| members[i]).collect();
        let (u_prof, _, _) = proficiency_from_levels(
            owners
                .iter()
                .enumerate()
                .map(|(j, &o)| self.levels[o * c + j]),
            &self.task.task_type,
            self.config.upsilon,
        );
        (owners, u_prof)
    }

    /// Synergistic value of the team formed by `members` (sorted roster indices).
    pub fn value(&self, members: &[usize]) -> f64 {
        let (_, u_prof) = self.proficiency(members);
        combine(self.task.lambda(), u_prof, self.congeniality(members))
    }

    pub fn record(&self, team: &Team) -> SynergyRecord {
        let (owners, u_prof) = self.proficiency(team.members());
        let u_con = self.congeniality(team.members());
        SynergyRecord {
            team: team.clone(),
            s: combine(self.task.lambda(), u_prof, u_con),
            u_prof,
            u_con,
            assignment: CompetenceAssignment::from_owners(owners),
        }
    }

    pub fn score(&self, partition: &Partition) -> PartitionScore {
        PartitionScore::from_values(
            partition.teams().iter().map(|t| self.value(t.members())),
            self.floor(),
        )
    }
}

/// Memoizes team values by member set. One per solver run.
#[derive(Debug)]
pub struct CachedEvaluator<'e, 'a> {
    eval: &'e Evaluator<'a>,
    cache: HashMap<Vec<usize>, f64>,
}

impl<'e, 'a> CachedEvaluator<'e, 'a> {
    pub fn new(eval: &'e Evaluator<'a>) -> Self {
        Self {
            eval,
            cache: HashMap::new(),
        }
    }

    pub fn inner(&self) -> &'e Evaluator<'a> {
        self.eval
    }

    /// `members` must be sorted.
    pub fn value(&mut self, members: &[usize]) -> f64 {
        if let Some(&v) = self.cache.get(members) {
            return v;
        }
        let v = self.eval.value(members);
        self.cache.insert(members.to_vec(), v);
        v
    }

    pub fn log_value(&mut self, members: &[usize]) -> f64 {
        let floor = self.eval.floor();
        floored_ln(self.value(members), floor)
    }

    pub fn score(&mut self, partition: &Partition) -> PartitionScore {
        let floor = self.eval.floor();
        let values: Vec<f64> = partition
            .teams()
            .iter()
            .map(|t| self.value(t.members()))
            .collect();
        PartitionScore::from_values(values, floor)
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }
}
