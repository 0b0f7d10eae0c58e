//! Balanced competence assignment and team proficiency.
//!
//! Every required competence goes to exactly one team member. A member may
//! hold at most `ceil(|C| / |K|)` competences, and when there are at least as
//! many competences as members, every member holds at least one. Among those
//! assignments we pick the one with minimum total cost, where assigning a
//! student to a competence costs the weighted distance between their level
//! and the required level (under-shoot scaled by `upsilon`, over-shoot by
//! `1 - upsilon`).
//!
//! Since each competence has a single assignee, the under- and over-proficiency
//! denominators are always 2 and minimizing the cost maximizes `u_prof`.
//!
//! Small instances (up to [`ENUMERATION_LIMIT`] competences) are solved by a
//! pruned depth-first enumeration; larger ones fall back to a min-cost flow.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Requirement, Roster, Student, TaskType, Team};

/// Largest competence count handled by enumeration before switching to min-cost flow.
pub const ENUMERATION_LIMIT: usize = 8;

/// Largest team size / competence count accepted by [`brute_force_assignment`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

const TIE_TOL: f64 = 1e-12;

/// Who is responsible for each requirement of a task type.
///
/// `owners[j]` is the roster index of the student holding requirement `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompetenceAssignment {
    owners: Vec<usize>,
}

impl CompetenceAssignment {
    pub fn from_owners(owners: Vec<usize>) -> Self {
        Self { owners }
    }

    /// Builds an assignment from a student → competences map.
    pub fn from_mapping(
        mapping: &BTreeMap<usize, Vec<String>>,
        task_type: &TaskType,
    ) -> Result<Self> {
        let mut owners = vec![None; task_type.requirements.len()];
        for (&student, competences) in mapping {
            for c in competences {
                let j = task_type
                    .requirements
                    .iter()
                    .position(|r| &r.competence == c)
                    .ok_or_else(|| {
                        Error::AssignmentMismatch(format!("competence `{c}` is not required"))
                    })?;
                if owners[j].replace(student).is_some() {
                    return Err(Error::AssignmentMismatch(format!(
                        "competence `{c}` assigned twice"
                    )));
                }
            }
        }
        let owners = owners
            .into_iter()
            .zip(&task_type.requirements)
            .map(|(o, r)| {
                o.ok_or_else(|| {
                    Error::AssignmentMismatch(format!("competence `{}` unassigned", r.competence))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { owners })
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    /// Student → assigned competence ids. Members without competences map to an empty list.
    pub fn mapping(&self, team: &Team, task_type: &TaskType) -> BTreeMap<usize, Vec<String>> {
        let mut map: BTreeMap<usize, Vec<String>> =
            team.members().iter().map(|&s| (s, Vec::new())).collect();
        for (owner, req) in self.owners.iter().zip(&task_type.requirements) {
            map.entry(*owner).or_default().push(req.competence.clone());
        }
        map
    }

    /// Checks coverage, the per-member cap and the conditional at-least-one rule.
    pub fn validate(&self, team: &Team, task_type: &TaskType) -> Result<()> {
        let c = task_type.requirements.len();
        if self.owners.len() != c {
            return Err(Error::AssignmentMismatch(format!(
                "{} owners for {c} competences",
                self.owners.len()
            )));
        }
        let k = team.len();
        let cap = c.div_ceil(k);
        let mut load = vec![0usize; k];
        for &o in &self.owners {
            let pos = team.members().binary_search(&o).map_err(|_| {
                Error::AssignmentMismatch(format!("student index {o} is not a team member"))
            })?;
            load[pos] += 1;
        }
        if load.iter().any(|&l| l > cap) {
            return Err(Error::AssignmentMismatch(format!(
                "a member holds more than {cap} competences"
            )));
        }
        if c >= k && load.contains(&0) {
            return Err(Error::AssignmentMismatch(
                "a member holds no competence".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProficiencyResult {
    pub assignment: CompetenceAssignment,
    pub u_prof: f64,
    pub under: f64,
    pub over: f64,
}

/// Cost of making a student with `level` responsible for `req`.
pub fn level_cost(level: f64, req: &Requirement, upsilon: f64) -> f64 {
    let diff = level - req.level;
    if diff >= 0.0 {
        diff * (1.0 - upsilon) * req.weight
    } else {
        -diff * upsilon * req.weight
    }
}

pub fn assignment_cost(student: &Student, req: &Requirement, upsilon: f64) -> f64 {
    level_cost(student.level(&req.competence), req, upsilon)
}

fn check_owners(
    team: &Team,
    task_type: &TaskType,
    assignment: &CompetenceAssignment,
) -> Result<()> {
    if assignment.owners.len() != task_type.requirements.len() {
        return Err(Error::AssignmentMismatch(
            "assignment and task type disagree on competence count".into(),
        ));
    }
    if let Some(o) = assignment.owners.iter().find(|&&o| !team.contains(o)) {
        return Err(Error::AssignmentMismatch(format!(
            "student index {o} is not a team member"
        )));
    }
    Ok(())
}

/// Weighted under-shoot of assigned levels against required levels.
pub fn under_proficiency(
    team: &Team,
    task_type: &TaskType,
    assignment: &CompetenceAssignment,
    roster: &Roster,
) -> Result<f64> {
    check_owners(team, task_type, assignment)?;
    Ok(degree(task_type, assignment, roster, |d| d.min(0.0).abs()))
}

/// Weighted over-shoot of assigned levels against required levels.
pub fn over_proficiency(
    team: &Team,
    task_type: &TaskType,
    assignment: &CompetenceAssignment,
    roster: &Roster,
) -> Result<f64> {
    check_owners(team, task_type, assignment)?;
    Ok(degree(task_type, assignment, roster, |d| d.max(0.0)))
}

fn degree(
    task_type: &TaskType,
    assignment: &CompetenceAssignment,
    roster: &Roster,
    part: impl Fn(f64) -> f64,
) -> f64 {
    // one assignee per competence: |delta| + 1 = 2
    task_type
        .requirements
        .iter()
        .zip(&assignment.owners)
        .map(|(req, &o)| req.weight * part(roster.get(o).level(&req.competence) - req.level) / 2.0)
        .sum()
}

pub(crate) fn proficiency_from_levels(
    levels: impl Iterator<Item = f64>,
    task_type: &TaskType,
    upsilon: f64,
) -> (f64, f64, f64) {
    let (mut under, mut over) = (0.0, 0.0);
    for (level, req) in levels.zip(&task_type.requirements) {
        let d = level - req.level;
        under += req.weight * d.min(0.0).abs() / 2.0;
        over += req.weight * d.max(0.0) / 2.0;
    }
    let u_prof = 1.0 - (upsilon * under + (1.0 - upsilon) * over);
    (u_prof, under, over)
}

/// Minimum-cost balanced assignment for a `k × c` row-major cost matrix.
///
/// Returns the local owner index of each competence and the total cost.
pub(crate) fn solve_costs(costs: &[f64], k: usize, c: usize) -> (Vec<usize>, f64) {
    debug_assert_eq!(costs.len(), k * c);
    if c <= ENUMERATION_LIMIT {
        solve_by_enumeration(costs, k, c)
    } else {
        solve_by_flow(costs, k, c)
    }
}

struct Search<'a> {
    costs: &'a [f64],
    k: usize,
    c: usize,
    cap: usize,
    require_all: bool,
    /// `suffix_min[j]` = sum over competences `j..` of the cheapest member cost.
    suffix_min: Vec<f64>,
    load: Vec<usize>,
    idle: usize,
    current: Vec<usize>,
    best: Vec<usize>,
    best_cost: f64,
}

impl Search<'_> {
    fn dfs(&mut self, j: usize, cost: f64) {
        if j == self.c {
            if cost < self.best_cost - TIE_TOL {
                self.best_cost = cost;
                self.best.clone_from(&self.current);
            }
            return;
        }
        if cost + self.suffix_min[j] >= self.best_cost - TIE_TOL {
            return;
        }
        let remaining = self.c - j;
        for i in 0..self.k {
            if self.load[i] == self.cap {
                continue;
            }
            let was_idle = self.load[i] == 0;
            if self.require_all {
                let idle_after = self.idle - usize::from(was_idle);
                if idle_after > remaining - 1 {
                    continue;
                }
            }
            self.load[i] += 1;
            if was_idle {
                self.idle -= 1;
            }
            self.current[j] = i;
            self.dfs(j + 1, cost + self.costs[i * self.c + j]);
            self.load[i] -= 1;
            if was_idle {
                self.idle += 1;
            }
        }
    }
}

/// Depth-first enumeration in lexicographic owner order with a column-minimum bound.
/// Ties keep the first optimum found, i.e. the lexicographically smallest owner vector.
pub(crate) fn solve_by_enumeration(costs: &[f64], k: usize, c: usize) -> (Vec<usize>, f64) {
    let mut suffix_min = vec![0.0; c + 1];
    for j in (0..c).rev() {
        let col_min = (0..k)
            .map(|i| costs[i * c + j])
            .fold(f64::INFINITY, f64::min);
        suffix_min[j] = suffix_min[j + 1] + col_min;
    }
    let mut search = Search {
        costs,
        k,
        c,
        cap: c.div_ceil(k),
        require_all: c >= k,
        suffix_min,
        load: vec![0; k],
        idle: k,
        current: vec![0; c],
        best: vec![0; c],
        best_cost: f64::INFINITY,
    };
    search.dfs(0, 0.0);
    (search.best, search.best_cost)
}

/// Successive-shortest-path min-cost flow.
///
/// Source → competence (capacity 1), competence → member (capacity 1, cost p),
/// member → sink (capacity `cap`). The at-least-one lower bound is encoded as a
/// first unit arc with a large negative cost.
pub(crate) fn solve_by_flow(costs: &[f64], k: usize, c: usize) -> (Vec<usize>, f64) {
    const BONUS: f64 = 1e6;
    let cap = c.div_ceil(k);
    let require_all = c >= k;
    let source = 0;
    let sink = 1 + c + k;
    let mut g = FlowGraph::new(sink + 1);
    for j in 0..c {
        g.add_edge(source, 1 + j, 1, 0.0);
        for i in 0..k {
            g.add_edge(1 + j, 1 + c + i, 1, costs[i * c + j]);
        }
    }
    for i in 0..k {
        if require_all {
            g.add_edge(1 + c + i, sink, 1, -BONUS);
            if cap > 1 {
                g.add_edge(1 + c + i, sink, (cap - 1) as i64, 0.0);
            }
        } else {
            g.add_edge(1 + c + i, sink, cap as i64, 0.0);
        }
    }
    for _ in 0..c {
        let pushed = g.augment(source, sink);
        debug_assert!(pushed, "balanced assignment always exists");
    }
    let mut owners = vec![0; c];
    let mut total = 0.0;
    for j in 0..c {
        for &e in &g.adj[1 + j] {
            let edge = &g.edges[e];
            if edge.to > c && edge.to < sink && edge.cap == 0 {
                owners[j] = edge.to - 1 - c;
                total += edge.cost;
            }
        }
    }
    (owners, total)
}

struct FlowEdge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct FlowGraph {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(FlowEdge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(FlowEdge {
            to: from,
            cap: 0,
            cost: -cost,
        });
    }

    /// Pushes one unit along a cheapest residual path (Bellman-Ford).
    fn augment(&mut self, source: usize, sink: usize) -> bool {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![usize::MAX; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] - 1e-12 {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_infinite() {
            return false;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            self.edges[e].cap -= 1;
            self.edges[e ^ 1].cap += 1;
            v = self.edges[e ^ 1].to;
        }
        true
    }
}

fn check_team(team: &Team, task_type: &TaskType) -> Result<()> {
    if team.len() < 2 {
        return Err(Error::InvalidTeam("team smaller than two".into()));
    }
    if task_type.requirements.is_empty() {
        return Err(Error::InvalidTask("no requirements".into()));
    }
    Ok(())
}

/// Best balanced assignment for a team and the resulting proficiency.
pub fn solve_balanced_assignment(
    team: &Team,
    task_type: &TaskType,
    upsilon: f64,
    roster: &Roster,
) -> Result<ProficiencyResult> {
    check_team(team, task_type)?;
    let k = team.len();
    let c = task_type.requirements.len();
    let costs: Vec<f64> = team
        .members()
        .iter()
        .flat_map(|&s| {
            let student = roster.get(s);
            task_type
                .requirements
                .iter()
                .map(move |r| assignment_cost(student, r, upsilon))
        })
        .collect();
    let (local, _) = solve_costs(&costs, k, c);
    let owners: Vec<usize> = local.iter().map(|&i| team.members()[i]).collect();
    let (u_prof, under, over) = proficiency_from_levels(
        owners
            .iter()
            .zip(&task_type.requirements)
            .map(|(&o, r)| roster.get(o).level(&r.competence)),
        task_type,
        upsilon,
    );
    Ok(ProficiencyResult {
        assignment: CompetenceAssignment { owners },
        u_prof,
        under,
        over,
    })
}

/// Exhaustive search over every balanced assignment, maximizing `u_prof` directly.
///
/// Independent of the cost formulation; used as a reference for the solver.
pub fn brute_force_assignment(
    team: &Team,
    task_type: &TaskType,
    upsilon: f64,
    roster: &Roster,
) -> Result<ProficiencyResult> {
    check_team(team, task_type)?;
    let k = team.len();
    let c = task_type.requirements.len();
    if k > BRUTE_FORCE_LIMIT || c > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            what: "assignment enumeration",
            required: (k as u128).pow(c as u32),
            limit: (BRUTE_FORCE_LIMIT as u128).pow(BRUTE_FORCE_LIMIT as u32),
        });
    }
    let cap = c.div_ceil(k);
    let mut owners = vec![0usize; c];
    let mut best: Option<ProficiencyResult> = None;
    loop {
        let mut load = vec![0usize; k];
        for &o in &owners {
            load[o] += 1;
        }
        let balanced = load.iter().all(|&l| l <= cap) && (c < k || load.iter().all(|&l| l >= 1));
        if balanced {
            let assignment = CompetenceAssignment::from_owners(
                owners.iter().map(|&i| team.members()[i]).collect(),
            );
            let under = under_proficiency(team, task_type, &assignment, roster)?;
            let over = over_proficiency(team, task_type, &assignment, roster)?;
            let u_prof = 1.0 - (upsilon * under + (1.0 - upsilon) * over);
            if best.as_ref().is_none_or(|b| u_prof > b.u_prof) {
                best = Some(ProficiencyResult {
                    assignment,
                    u_prof,
                    under,
                    over,
                });
            }
        }
        // odometer increment over k^c owner vectors
        let mut j = c;
        loop {
            if j == 0 {
                return best.ok_or_else(|| {
                    Error::AssignmentMismatch("no balanced assignment exists".into())
                });
            }
            j -= 1;
            owners[j] += 1;
            if owners[j] < k {
                break;
            }
            owners[j] = 0;
        }
    }
}
