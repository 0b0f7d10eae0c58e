//! Exact solver over the set-partitioning master problem.
//!
//! Every subset of the roster whose size is admitted by the size distribution
//! is a candidate team. After scoring all of them, we choose exactly `b`
//! pairwise-disjoint teams covering every student so that the sum of
//! `ln s(K)` is maximal, which maximizes the product of team values.
//!
//! The master problem is solved by branching on the lowest unassigned
//! student: its team must be one of the candidates whose smallest member it
//! is. Subproblems are keyed by the set of students still free and solved
//! once each, so the search is a dynamic program over residual sets. A greedy
//! dive provides the first incumbent and every finished root branch can
//! improve it.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::io::Write;
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{floored_ln, CachedEvaluator, Evaluator, PartitionScore, SynergyRecord};
use crate::model::{
    quantity_distribution, EvalConfig, Partition, Roster, SizeDistribution, Task, Team,
};
use crate::trace::{AnytimeTrace, Clock};
use crate::Solution;

/// Default cap on the number of candidate teams.
pub const DEFAULT_TEAM_LIMIT: u128 = 20_000_000;

/// Cap on the number of partitions [`brute_force_partitions`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Default cap on residual student sets memoized by the search (roughly 40 bytes each).
pub const DEFAULT_STATE_LIMIT: u64 = 10_000_000;

/// Students are tracked in a 64-bit mask during search.
pub const MAX_STUDENTS: usize = 64;

const IMPROVE_TOL: f64 = 1e-12;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Number of candidate teams: sum over admitted sizes `y` of `C(n, y)`.
pub fn team_count(n: usize, distribution: &SizeDistribution) -> u128 {
    distribution
        .entries()
        .iter()
        .map(|&(_, size)| binomial(n, size))
        .sum()
}

/// Number of partitions of `n` students matching the distribution.
pub fn partition_count(distribution: &SizeDistribution) -> u128 {
    fn go(remaining: usize, counts: &mut [(usize, usize)]) -> u128 {
        if remaining == 0 {
            return 1;
        }
        let mut total: u128 = 0;
        for i in 0..counts.len() {
            let (count, size) = counts[i];
            if count == 0 {
                continue;
            }
            counts[i].0 -= 1;
            // the lowest remaining student picks size - 1 partners
            let ways = binomial(remaining - 1, size - 1);
            total = total.saturating_add(ways.saturating_mul(go(remaining - size, counts)));
            counts[i].0 += 1;
        }
        total
    }
    let mut counts = distribution.entries().to_vec();
    go(distribution.student_count(), &mut counts)
}

fn combinations(n: usize, k: usize, out: &mut Vec<Team>) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(Team::from_sorted(idx.clone()));
        let Some(i) = (0..k).rev().find(|&i| idx[i] < i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All teams of admitted sizes, in lexicographic order of their sorted members.
pub fn enumerate_teams(
    n: usize,
    distribution: &SizeDistribution,
    limit: u128,
) -> Result<Vec<Team>> {
    let required = team_count(n, distribution);
    if required > limit {
        return Err(Error::GuardExceeded {
            what: "team enumeration",
            required,
            limit,
        });
    }
    let mut teams = Vec::with_capacity(required as usize);
    for &(_, size) in distribution.entries() {
        if size <= n {
            combinations(n, size, &mut teams);
        }
    }
    teams.sort_unstable();
    Ok(teams)
}

/// Scores every team. Output order follows input order.
pub fn score_teams(teams: &[Team], eval: &Evaluator<'_>) -> Vec<SynergyRecord> {
    teams.par_iter().map(|t| eval.record(t)).collect()
}

/// The linearized set-partitioning problem: pick `b` disjoint teams covering
/// every student, maximizing the sum of their log values.
#[derive(Debug, Clone)]
pub struct MasterProblem {
    teams: Vec<Team>,
    log_s: Vec<f64>,
    /// Indices of the teams containing each student.
    membership: Vec<Vec<usize>>,
    distribution: SizeDistribution,
}

impl MasterProblem {
    pub fn new(
        n: usize,
        distribution: SizeDistribution,
        teams: Vec<Team>,
        log_s: Vec<f64>,
    ) -> Result<Self> {
        assert_eq!(teams.len(), log_s.len());
        let mut membership = vec![Vec::new(); n];
        for (j, t) in teams.iter().enumerate() {
            if !distribution.has_size(t.len()) {
                return Err(Error::InvalidTeam(format!(
                    "team of size {} not admitted by the size distribution",
                    t.len()
                )));
            }
            for &s in t.members() {
                membership[s].push(j);
            }
        }
        if let Some(s) = membership.iter().position(Vec::is_empty) {
            return Err(Error::InvalidPartition(format!(
                "student index {s} belongs to no candidate team"
            )));
        }
        Ok(Self {
            teams,
            log_s,
            membership,
            distribution,
        })
    }

    pub fn from_records(
        n: usize,
        distribution: SizeDistribution,
        records: &[SynergyRecord],
        floor: f64,
    ) -> Result<Self> {
        let teams = records.iter().map(|r| r.team.clone()).collect();
        let log_s = records.iter().map(|r| floored_ln(r.s, floor)).collect();
        Self::new(n, distribution, teams, log_s)
    }

    pub fn team_count(&self) -> usize {
        self.teams.len()
    }

    pub fn required_teams(&self) -> usize {
        self.distribution.team_count()
    }

    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_s
    }

    pub fn membership(&self, student: usize) -> &[usize] {
        &self.membership[student]
    }

    /// Writes the problem as one row per line:
    ///
    /// ```text
    /// #schema=1
    /// vars <q>
    /// obj <ln s_0> ... <ln s_{q-1}>
    /// var <j> <member id>...
    /// cover <student id> <j>... = 1
    /// card = <b>
    /// ```
    ///
    /// `obj` holds the objective coefficient of each binary variable, `cover`
    /// rows list the variables containing a student, and `card` states that
    /// exactly `b` variables are selected.
    pub fn write_lp(&self, roster: &Roster, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "#schema=1")?;
        writeln!(w, "vars {}", self.teams.len())?;
        write!(w, "obj")?;
        for v in &self.log_s {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
        for (j, t) in self.teams.iter().enumerate() {
            write!(w, "var {j}")?;
            for id in roster.ids(t) {
                write!(w, " {id}")?;
            }
            writeln!(w)?;
        }
        for (s, teams) in self.membership.iter().enumerate() {
            write!(w, "cover {}", roster.get(s).id)?;
            for j in teams {
                write!(w, " {j}")?;
            }
            writeln!(w, " = 1")?;
        }
        writeln!(w, "card = {}", self.required_teams())
    }

    /// Solves the problem, stopping at `budget` with the best selection so far.
    ///
    /// Fails with [`Error::GuardExceeded`] when more than `state_limit`
    /// residual student sets would have to be memoized.
    pub fn solve(&self, budget: Option<Duration>, state_limit: u64) -> Result<MasterSolution> {
        Search::new(self, budget, state_limit).run()
    }
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    /// Selected team indices, ordered by their lowest member.
    pub selected: Vec<usize>,
    pub log_value: f64,
    pub optimal: bool,
    /// Residual sets expanded.
    pub nodes: u64,
    /// `(elapsed seconds, selection log value)` for every incumbent found.
    pub incumbents: Vec<(f64, f64)>,
}

/// Multiply-shift hashing for `u64` keys; the std hasher dominates the
/// search time otherwise.
#[derive(Default, Clone, Copy)]
struct MaskHasher(u64);

impl Hasher for MaskHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ b as u64).wrapping_mul(0x51_7C_C1_B7_27_22_0A_95);
        }
    }

    fn write_u64(&mut self, v: u64) {
        let h = (self.0 ^ v).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.0 = h ^ (h >> 29);
    }
}

/// Memoized search over residual student sets.
///
/// The value of a residual set `R` is the best log value of a partition of
/// `R` into the teams still to be formed. Since sizes are `m` and `m + 1` and
/// fewer than `m` teams have size `m + 1`, `|R|` alone fixes how many teams of
/// each size remain: `|R| mod m` of size `m + 1`, the rest of size `m`. Hence
/// `R` is a complete subproblem key and each set is solved once.
///
/// Children of `R` are the teams made of its lowest member plus `size − 1`
/// other members of `R`, generated directly and looked up by colex rank.
/// Among equally good children the first generated wins: smaller size first,
/// then lexicographic order of members.
struct Search<'p> {
    problem: &'p MasterProblem,
    n: usize,
    /// `rank_to_team[size][colex rank]`: team index, `NONE` if not a candidate.
    rank_to_team: Vec<Vec<u32>>,
    /// `choose[a][b] = C(a, b)` for colex ranks.
    choose: Vec<Vec<u64>>,
    m: usize,
    small_count: usize,
    big_count: usize,
    memo: HashMap<u64, f64, BuildHasherDefault<MaskHasher>>,
    state_limit: u64,
    nodes: u64,
    clock: Clock,
    deadline: Option<f64>,
    aborted: bool,
    guard_hit: bool,
}

const NONE: u32 = u32::MAX;

impl<'p> Search<'p> {
    fn new(problem: &'p MasterProblem, budget: Option<Duration>, state_limit: u64) -> Self {
        let n = problem.membership.len();
        let entries = problem.distribution.entries();
        let m = entries.iter().map(|&(_, s)| s).min().unwrap_or(1);
        let max_size = entries.iter().map(|&(_, s)| s).max().unwrap_or(1);
        let choose: Vec<Vec<u64>> = (0..=n)
            .map(|a| (0..=max_size + 1).map(|b| binomial(a, b) as u64).collect())
            .collect();
        let mut rank_to_team: Vec<Vec<u32>> = (0..=max_size)
            .map(|k| {
                if problem.distribution.has_size(k) {
                    vec![NONE; choose[n][k] as usize]
                } else {
                    Vec::new()
                }
            })
            .collect();
        for (j, t) in problem.teams.iter().enumerate() {
            let rank: u64 = t
                .members()
                .iter()
                .enumerate()
                .map(|(i, &s)| choose[s][i + 1])
                .sum();
            rank_to_team[t.len()][rank as usize] = j as u32;
        }
        Self {
            problem,
            n,
            rank_to_team,
            choose,
            m,
            small_count: problem.distribution.count_of(m),
            big_count: problem.distribution.count_of(m + 1),
            memo: HashMap::default(),
            state_limit,
            nodes: 0,
            clock: Clock::start(),
            deadline: budget.map(|d| d.as_secs_f64()),
            aborted: false,
            guard_hit: false,
        }
    }

    /// Sizes that may be used next from a residual set of `p` students, smaller first.
    fn admitted(&self, p: usize) -> ([usize; 2], usize) {
        let big = p % self.m;
        if big > self.big_count || big * (self.m + 1) > p {
            return ([0; 2], 0);
        }
        let small = (p - big * (self.m + 1)) / self.m;
        let mut sizes = [0; 2];
        let mut k = 0;
        if small > 0 && small <= self.small_count {
            sizes[k] = self.m;
            k += 1;
        }
        if big > 0 {
            sizes[k] = self.m + 1;
            k += 1;
        }
        (sizes, k)
    }

    /// Calls `visit(team, child residual)` for every candidate team formed by
    /// the lowest member of `residual`, in generation order.
    fn for_each_child(&self, residual: u64, mut visit: impl FnMut(&Self, u32, u64)) {
        let low = residual.trailing_zeros() as usize;
        let mut others = [0u8; 64];
        let mut count = 0;
        let mut rest = residual & (residual - 1);
        while rest != 0 {
            others[count] = rest.trailing_zeros() as u8;
            count += 1;
            rest &= rest - 1;
        }
        let others = &others[..count];
        let (sizes, k) = self.admitted(residual.count_ones() as usize);
        let mut idx = [0usize; 64];
        for &size in &sizes[..k] {
            let table = &self.rank_to_team[size];
            // idx[i] indexes `others` and fills position i + 1 of the team
            let pick = size - 1;
            if pick > others.len() {
                continue;
            }
            for (i, slot) in idx[..pick].iter_mut().enumerate() {
                *slot = i;
            }
            loop {
                let mut rank = self.choose[low][1];
                let mut mask = 1u64 << low;
                for (i, &o) in idx[..pick].iter().enumerate() {
                    let s = others[o] as usize;
                    rank += self.choose[s][i + 2];
                    mask |= 1u64 << s;
                }
                let j = table[rank as usize];
                if j != NONE {
                    visit(self, j, residual & !mask);
                }
                let Some(i) = (0..pick).rev().find(|&i| idx[i] < i + others.len() - pick) else {
                    break;
                };
                idx[i] += 1;
                for t in i + 1..pick {
                    idx[t] = idx[t - 1] + 1;
                }
            }
        }
    }

    fn value(&mut self, residual: u64) -> f64 {
        if residual == 0 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(&residual) {
            return v;
        }
        if self.aborted {
            return f64::NEG_INFINITY;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) {
            if let Some(d) = self.deadline {
                if self.clock.elapsed() > d {
                    self.aborted = true;
                    return f64::NEG_INFINITY;
                }
            }
        }
        if self.memo.len() as u64 >= self.state_limit {
            self.aborted = true;
            self.guard_hit = true;
            return f64::NEG_INFINITY;
        }
        let mut children = Vec::new();
        self.for_each_child(residual, |_, j, child| children.push((j, child)));
        let mut best = f64::NEG_INFINITY;
        for (j, child) in children {
            let v = self.problem.log_s[j as usize] + self.value(child);
            if self.aborted {
                return f64::NEG_INFINITY;
            }
            if v > best {
                best = v;
            }
        }
        self.memo.insert(residual, best);
        best
    }

    /// First child of `residual` achieving its memoized value.
    fn best_child(&self, residual: u64) -> (u32, u64) {
        let target = self.memo[&residual];
        let mut found = None;
        self.for_each_child(residual, |this, j, child| {
            if found.is_none() {
                let rest = if child == 0 { 0.0 } else { this.memo[&child] };
                if this.problem.log_s[j as usize] + rest == target {
                    found = Some((j, child));
                }
            }
        });
        found.expect("memoized value is attained by a child")
    }

    /// Follows optimal choices from `residual` down to the empty set.
    fn completion(&self, mut residual: u64, out: &mut Vec<usize>) {
        while residual != 0 {
            let (j, child) = self.best_child(residual);
            out.push(j as usize);
            residual = child;
        }
    }

    /// Repeatedly takes the best admissible team of the lowest free student.
    fn greedy(&self, full: u64) -> (Vec<usize>, f64) {
        let mut residual = full;
        let mut picked = Vec::new();
        let mut log = 0.0;
        while residual != 0 {
            let mut best: Option<(u32, u64)> = None;
            self.for_each_child(residual, |this, j, child| {
                let better = match best {
                    None => true,
                    Some((b, _)) => this.problem.log_s[j as usize] > this.problem.log_s[b as usize],
                };
                if better {
                    best = Some((j, child));
                }
            });
            let (j, child) =
                best.expect("a residual set always admits a team of its lowest member");
            picked.push(j as usize);
            log += self.problem.log_s[j as usize];
            residual = child;
        }
        (picked, log)
    }

    fn run(mut self) -> Result<MasterSolution> {
        let n = self.n;
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let (mut selected, mut best) = self.greedy(full);
        let mut incumbents = vec![(self.clock.elapsed(), best)];

        // Root branches are expanded here so that each finished branch can
        // raise the incumbent.
        let mut roots = Vec::new();
        self.for_each_child(full, |_, j, child| roots.push((j, child)));
        for (j, rest) in roots {
            let v = self.problem.log_s[j as usize] + self.value(rest);
            if self.aborted {
                break;
            }
            if v > best + IMPROVE_TOL {
                best = v;
                selected = vec![j as usize];
                self.completion(rest, &mut selected);
                incumbents.push((self.clock.elapsed(), v));
            }
        }
        if self.guard_hit {
            return Err(Error::GuardExceeded {
                what: "exact search states",
                required: self.state_limit as u128 + 1,
                limit: self.state_limit as u128,
            });
        }
        selected.sort_by_key(|&j| self.problem.teams[j].members()[0]);
        Ok(MasterSolution {
            selected,
            log_value: best,
            optimal: !self.aborted,
            nodes: self.nodes,
            incumbents,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExactOptions {
    /// Stop the search after this long and return the incumbent.
    pub time_budget: Option<Duration>,
    /// Cap on the number of candidate teams; `None` uses [`DEFAULT_TEAM_LIMIT`].
    pub team_limit: Option<u128>,
    /// Cap on memoized residual sets; `None` uses [`DEFAULT_STATE_LIMIT`].
    pub state_limit: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub solution: Solution,
    /// False when the time budget interrupted the search.
    pub optimal: bool,
    /// Seconds spent enumerating and scoring teams.
    pub gen_time_s: f64,
    /// Seconds spent building and solving the master problem.
    pub solve_time_s: f64,
    pub team_count: usize,
    pub nodes: u64,
    pub master: MasterProblem,
    pub records: Vec<SynergyRecord>,
}

/// Optimal partition of the roster for the task.
///
/// Trace timestamps are measured from solver entry, so the first incumbent
/// appears only after all teams have been scored.
pub fn solve_exact(
    roster: &Roster,
    task: &Task,
    config: &EvalConfig,
    options: &ExactOptions,
) -> Result<ExactSolution> {
    let clock = Clock::start();
    let n = roster.len();
    let distribution = quantity_distribution(n, task.m)?;
    if n > MAX_STUDENTS {
        return Err(Error::GuardExceeded {
            what: "exact search",
            required: n as u128,
            limit: MAX_STUDENTS as u128,
        });
    }
    let eval = Evaluator::new(roster, task, config)?;
    let teams = enumerate_teams(
        n,
        &distribution,
        options.team_limit.unwrap_or(DEFAULT_TEAM_LIMIT),
    )?;
    let records = score_teams(&teams, &eval);
    let gen_time_s = clock.elapsed();

    let master = MasterProblem::from_records(n, distribution, &records, config.epsilon_floor)?;
    let remaining = options
        .time_budget
        .map(|b| b.saturating_sub(Duration::from_secs_f64(gen_time_s)));
    let solved = master.solve(
        remaining,
        options.state_limit.unwrap_or(DEFAULT_STATE_LIMIT),
    )?;
    let solve_time_s = clock.elapsed() - gen_time_s;

    let selected: Vec<Team> = solved
        .selected
        .iter()
        .map(|&j| master.teams[j].clone())
        .collect();
    let partition = Partition::new(selected).canonical();
    let score = PartitionScore::from_values(
        solved.selected.iter().map(|&j| records[j].s),
        config.epsilon_floor,
    );
    let mut trace = AnytimeTrace::new();
    let last = solved.incumbents.len().saturating_sub(1);
    for (i, &(t, log_value)) in solved.incumbents.iter().enumerate() {
        let best = if i == last {
            score
        } else {
            PartitionScore {
                value: log_value.exp(),
                log_value,
            }
        };
        trace.record(gen_time_s + t, best);
    }
    Ok(ExactSolution {
        solution: Solution {
            partition,
            score,
            trace,
        },
        optimal: solved.optimal,
        gen_time_s,
        solve_time_s,
        team_count: teams.len(),
        nodes: solved.nodes,
        master,
        records,
    })
}

/// Enumerates every size-constrained partition and returns one maximizing the
/// product of team values, compared in the linear domain.
pub fn brute_force_partitions(
    roster: &Roster,
    task: &Task,
    config: &EvalConfig,
) -> Result<(Partition, PartitionScore)> {
    let n = roster.len();
    let distribution = quantity_distribution(n, task.m)?;
    let count = partition_count(&distribution);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            what: "partition enumeration",
            required: count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let eval = Evaluator::new(roster, task, config)?;
    let mut scorer = CachedEvaluator::new(&eval);
    let mut state = BruteState {
        free: vec![true; n],
        slots: distribution.entries().to_vec(),
        current: Vec::new(),
        best: None,
        visited: 0,
    };
    state.go(&mut scorer);
    debug_assert_eq!(state.visited as u128, count);
    let (teams, _) = state.best.expect("at least one partition exists");
    let partition = Partition::new(teams).canonical();
    let score = scorer.score(&partition);
    Ok((partition, score))
}

struct BruteState {
    free: Vec<bool>,
    slots: Vec<(usize, usize)>,
    current: Vec<Team>,
    best: Option<(Vec<Team>, f64)>,
    visited: u64,
}

impl BruteState {
    fn go(&mut self, scorer: &mut CachedEvaluator<'_, '_>) {
        let Some(lowest) = self.free.iter().position(|&f| f) else {
            self.visited += 1;
            let product: f64 = self
                .current
                .iter()
                .map(|t| scorer.value(t.members()))
                .product();
            if self.best.as_ref().is_none_or(|(_, b)| product > *b) {
                self.best = Some((self.current.clone(), product));
            }
            return;
        };
        self.free[lowest] = false;
        let others: Vec<usize> = (lowest + 1..self.free.len())
            .filter(|&i| self.free[i])
            .collect();
        for slot in 0..self.slots.len() {
            let (count, size) = self.slots[slot];
            if count == 0 {
                continue;
            }
            self.slots[slot].0 -= 1;
            let mut picks = Vec::new();
            if size - 1 <= others.len() {
                combinations_of(&others, size - 1, &mut picks);
            }
            for partners in picks {
                let mut members = vec![lowest];
                members.extend(&partners);
                for &p in &partners {
                    self.free[p] = false;
                }
                self.current.push(Team::from_sorted(members));
                self.go(scorer);
                self.current.pop();
                for &p in &partners {
                    self.free[p] = true;
                }
            }
            self.slots[slot].0 += 1;
        }
        self.free[lowest] = true;
    }
}

fn combinations_of(items: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 0 {
        out.push(Vec::new());
        return;
    }
    let mut local = Vec::new();
    combinations(items.len(), k, &mut local);
    out.extend(
        local
            .into_iter()
            .map(|t| t.members().iter().map(|&i| items[i]).collect()),
    );
}
