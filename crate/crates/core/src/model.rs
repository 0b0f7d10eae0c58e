//! Domain types: students, tasks, teams, partitions and the team-size arithmetic.
//!
//! Students are held in a [`Roster`] sorted by id. Everything downstream refers
//! to students by their position in that roster, so a [`Team`] is a sorted list
//! of roster indices rather than a list of id strings. Conversion back to ids
//! happens at the I/O boundary.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Post-Jungian personality profile, every dimension in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonalityProfile {
    /// Sensing (−) vs intuition (+).
    pub sn: f64,
    /// Thinking vs feeling.
    pub tf: f64,
    /// Extroversion vs introversion. Negative values are introverted.
    pub ei: f64,
    /// Perception vs judgment.
    pub pj: f64,
}

impl PersonalityProfile {
    pub fn new(sn: f64, tf: f64, ei: f64, pj: f64) -> Self {
        Self { sn, tf, ei, pj }
    }

    fn fields(&self) -> [(&'static str, f64); 4] {
        [
            ("sn", self.sn),
            ("tf", self.tf),
            ("ei", self.ei),
            ("pj", self.pj),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Man,
    Woman,
}

impl std::str::FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "man" => Ok(Gender::Man),
            "woman" => Ok(Gender::Woman),
            other => Err(format!("gender must be `man` or `woman`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for Gender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Gender::Man => "man",
            Gender::Woman => "woman",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Student {
    pub id: String,
    pub gender: Gender,
    pub profile: PersonalityProfile,
    /// Competence levels in `[0, 1]`. A competence that is absent counts as level 0.
    #[serde(default)]
    pub levels: BTreeMap<String, f64>,
}

impl Student {
    pub fn level(&self, competence: &str) -> f64 {
        self.levels.get(competence).copied().unwrap_or(0.0)
    }
}

/// Checks id uniqueness and value ranges, reporting every violation found.
pub fn validate_roster(students: &[Student]) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for s in students {
        if s.id.is_empty() {
            violations.push(Violation::EmptyId);
        } else if !seen.insert(s.id.as_str()) {
            violations.push(Violation::DuplicateId(s.id.clone()));
        }
        for (field, value) in s.profile.fields() {
            if !(-1.0..=1.0).contains(&value) {
                violations.push(Violation::OutOfRange {
                    id: s.id.clone(),
                    field: field.to_string(),
                    value,
                    lo: -1.0,
                    hi: 1.0,
                });
            }
        }
        for (competence, &value) in &s.levels {
            if !(0.0..=1.0).contains(&value) {
                violations.push(Violation::OutOfRange {
                    id: s.id.clone(),
                    field: competence.clone(),
                    value,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// A validated set of students, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Roster {
    students: Vec<Student>,
}

impl Roster {
    pub fn new(mut students: Vec<Student>) -> Result<Self> {
        validate_roster(&students).map_err(Error::InvalidRoster)?;
        students.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self { students })
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    pub fn students(&self) -> &[Student] {
        &self.students
    }

    pub fn get(&self, index: usize) -> &Student {
        &self.students[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.students
            .binary_search_by(|s| s.id.as_str().cmp(id))
            .ok()
    }

    pub fn ids<'a>(&'a self, team: &'a Team) -> impl Iterator<Item = &'a str> + 'a {
        team.members().iter().map(|&i| self.students[i].id.as_str())
    }

    /// Restricts the roster to the given ids, keeping id order.
    pub fn subset(&self, indices: &[usize]) -> Roster {
        let mut students: Vec<Student> =
            indices.iter().map(|&i| self.students[i].clone()).collect();
        students.sort_by(|a, b| a.id.cmp(&b.id));
        Roster { students }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub competence: String,
    /// Required level in `[0, 1]`.
    pub level: f64,
    /// Normalized importance; the weights of a task type sum to one.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskType {
    pub name: String,
    /// Weight of proficiency against congeniality in the synergistic value.
    pub lambda: f64,
    pub requirements: Vec<Requirement>,
}

impl TaskType {
    /// Builds a task type from `(competence, level, importance)` triples.
    /// Importances are normalized to sum to one.
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        lambda: f64,
        requirements: impl IntoIterator<Item = (S, f64, f64)>,
    ) -> Result<Self> {
        let requirements: Vec<Requirement> = requirements
            .into_iter()
            .map(|(c, level, weight)| Requirement {
                competence: c.into(),
                level,
                weight,
            })
            .collect();
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidTask(format!("lambda {lambda} not in [0, 1]")));
        }
        if requirements.is_empty() {
            return Err(Error::InvalidTask("no requirements".into()));
        }
        let mut seen = HashSet::new();
        for r in &requirements {
            if !seen.insert(r.competence.as_str()) {
                return Err(Error::InvalidTask(format!(
                    "competence `{}` required twice",
                    r.competence
                )));
            }
            if !(0.0..=1.0).contains(&r.level) {
                return Err(Error::InvalidTask(format!(
                    "level {} for `{}` not in [0, 1]",
                    r.level, r.competence
                )));
            }
            if !(r.weight >= 0.0 && r.weight.is_finite()) {
                return Err(Error::InvalidTask(format!(
                    "importance {} for `{}` must be non-negative",
                    r.weight, r.competence
                )));
            }
        }
        let total: f64 = requirements.iter().map(|r| r.weight).sum();
        if total <= 0.0 {
            return Err(Error::InvalidTask("importances sum to zero".into()));
        }
        let requirements = requirements
            .into_iter()
            .map(|r| Requirement {
                weight: r.weight / total,
                ..r
            })
            .collect();
        Ok(Self {
            name: name.into(),
            lambda,
            requirements,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidTask(format!("lambda {lambda} not in [0, 1]")));
        }
        Ok(Self {
            lambda,
            ..self.clone()
        })
    }

    pub fn competences(&self) -> impl Iterator<Item = &str> {
        self.requirements.iter().map(|r| r.competence.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_type: TaskType,
    /// Minimum team size; teams have `m` or `m + 1` members.
    pub m: usize,
}

impl Task {
    pub fn new(task_type: TaskType, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidTask(format!(
                "team size m = {m} must be >= 2"
            )));
        }
        Ok(Self { task_type, m })
    }

    pub fn lambda(&self) -> f64 {
        self.task_type.lambda
    }
}

/// A set of students, stored as sorted roster indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Team(Vec<usize>);

impl Team {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        if members.len() < 2 {
            return Err(Error::InvalidTeam(format!(
                "a team needs at least two members, got {}",
                members.len()
            )));
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTeam("repeated member".into()));
        }
        Ok(Self(members))
    }

    /// Builds a team from members already known to be sorted and distinct.
    pub(crate) fn from_sorted(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self(members)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, student: usize) -> bool {
        self.0.binary_search(&student).is_ok()
    }
}

/// Multiset of team sizes covering `n` students with teams of size `m` or `m + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeDistribution {
    /// `(count, size)` pairs, larger size first, zero counts omitted.
    entries: Vec<(usize, usize)>,
}

impl SizeDistribution {
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn team_count(&self) -> usize {
        self.entries.iter().map(|&(c, _)| c).sum()
    }

    pub fn student_count(&self) -> usize {
        self.entries.iter().map(|&(c, s)| c * s).sum()
    }

    pub fn has_size(&self, size: usize) -> bool {
        self.entries.iter().any(|&(_, s)| s == size)
    }

    pub fn count_of(&self, size: usize) -> usize {
        self.entries
            .iter()
            .find(|&&(_, s)| s == size)
            .map_or(0, |&(c, _)| c)
    }

    /// One entry per team, larger teams first.
    pub fn sizes(&self) -> Vec<usize> {
        self.entries
            .iter()
            .flat_map(|&(c, s)| std::iter::repeat_n(s, c))
            .collect()
    }
}

/// Team-size multiset for `n` students and minimum size `m`.
///
/// There are `b = n / m` teams; `n mod m` of them get an extra member. When
/// `n mod m > b` no partition into sizes `m`/`m + 1` exists.
pub fn quantity_distribution(n: usize, m: usize) -> Result<SizeDistribution> {
    if m < 2 || n < m {
        return Err(Error::InfeasibleSize { n, m });
    }
    let b = n / m;
    let extra = n % m;
    if extra > b {
        return Err(Error::InfeasibleSize { n, m });
    }
    let entries = [(extra, m + 1), (b - extra, m)]
        .into_iter()
        .filter(|&(c, _)| c > 0)
        .collect();
    Ok(SizeDistribution { entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    teams: Vec<Team>,
}

impl Partition {
    pub fn new(teams: Vec<Team>) -> Self {
        Self { teams }
    }

    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn into_teams(self) -> Vec<Team> {
        self.teams
    }

    pub(crate) fn teams_mut(&mut self) -> &mut Vec<Team> {
        &mut self.teams
    }

    /// Same teams ordered by their smallest member.
    pub fn canonical(&self) -> Partition {
        let mut teams = self.teams.clone();
        teams.sort();
        Partition { teams }
    }

    /// Checks exact cover of `0..n` and that team sizes match `quantity_distribution(n, m)`.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let dist = quantity_distribution(n, m)?;
        let mut seen = vec![false; n];
        for team in &self.teams {
            if team.len() < 2 {
                return Err(Error::InvalidPartition(
                    "team with fewer than two members".into(),
                ));
            }
            for &s in team.members() {
                if s >= n {
                    return Err(Error::InvalidPartition(format!(
                        "student index {s} out of range"
                    )));
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::InvalidPartition(format!(
                        "student index {s} appears in two teams"
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|&x| !x) {
            return Err(Error::InvalidPartition(format!(
                "student index {missing} is not in any team"
            )));
        }
        let mut sizes: Vec<usize> = self.teams.iter().map(Team::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        if sizes != dist.sizes() {
            return Err(Error::InvalidPartition(format!(
                "team sizes {sizes:?} do not match the required distribution {:?}",
                dist.sizes()
            )));
        }
        Ok(())
    }
}

/// Parameters of the congeniality and proficiency measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Under-proficiency penalty in `[0, 1]`.
    pub upsilon: f64,
    /// Weight of the extrovert-thinking-judging term.
    pub alpha: f64,
    /// Weight of the introvert term.
    pub beta: f64,
    /// Weight of gender balance, in `(0, 1]`.
    pub gamma: f64,
    /// Floor applied to synergistic values before taking logarithms.
    pub epsilon_floor: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            upsilon: 0.5,
            alpha: 0.11,
            beta: 0.33,
            gamma: 0.33,
            epsilon_floor: 1e-12,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.upsilon) {
            return bad(format!("upsilon {} not in [0, 1]", self.upsilon));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha {} must be positive", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta {} must be positive", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} not in (0, 1]", self.gamma));
        }
        if !(self.epsilon_floor > 0.0 && self.epsilon_floor <= 1e-6) {
            return bad(format!(
                "epsilon_floor {} not in (0, 1e-6]",
                self.epsilon_floor
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn student(id: &str, gender: Gender, p: [f64; 4]) -> Student {
        Student {
            id: id.into(),
            gender,
            profile: PersonalityProfile::new(p[0], p[1], p[2], p[3]),
            levels: BTreeMap::new(),
        }
    }

    #[test]
    fn quantity_distribution_examples() {
        assert_eq!(quantity_distribution(10, 5).unwrap().entries(), &[(2, 5)]);
        assert_eq!(
            quantity_distribution(11, 5).unwrap().entries(),
            &[(1, 6), (1, 5)]
        );
        assert_eq!(quantity_distribution(4, 2).unwrap().entries(), &[(2, 2)]);
        assert_eq!(quantity_distribution(3, 3).unwrap().entries(), &[(1, 3)]);
    }

    #[test]
    fn quantity_distribution_rejects_bad_sizes() {
        assert!(quantity_distribution(3, 4).is_err());
        assert!(quantity_distribution(5, 1).is_err());
        // one team of 3 or 4 cannot hold 5 students
        assert!(matches!(
            quantity_distribution(5, 3),
            Err(Error::InfeasibleSize { n: 5, m: 3 })
        ));
    }

    #[test]
    fn quantity_distribution_exhaustive() {
        for m in 2..=200 {
            for n in m..=200 {
                let b = n / m;
                match quantity_distribution(n, m) {
                    Ok(d) => {
                        assert_eq!(d.student_count(), n, "n={n} m={m}");
                        assert_eq!(d.team_count(), b, "n={n} m={m}");
                        assert!(d.entries().iter().all(|&(_, s)| s == m || s == m + 1));
                    }
                    Err(_) => {
                        // infeasible exactly when no b-team split into sizes m, m+1 exists
                        assert!(n % m > b, "n={n} m={m}");
                        assert!((0..=b).all(|k| k * (m + 1) + (b - k) * m != n));
                    }
                }
            }
        }
    }

    #[test]
    fn duplicate_id_is_named() {
        let roster = vec![
            student("s1", Gender::Man, [0.0; 4]),
            student("s1", Gender::Woman, [0.0; 4]),
        ];
        let err = validate_roster(&roster).unwrap_err();
        assert_eq!(err, vec![Violation::DuplicateId("s1".into())]);
        assert!(Error::InvalidRoster(err).to_string().contains("s1"));
    }

    #[test]
    fn out_of_range_profile_is_reported() {
        let roster = vec![student("a", Gender::Man, [1.2, 0.0, 0.0, 0.0])];
        let err = validate_roster(&roster).unwrap_err();
        assert!(matches!(&err[0], Violation::OutOfRange { field, .. } if field == "sn"));
    }

    #[test]
    fn every_violation_listed() {
        let mut bad = student("a", Gender::Man, [1.2, -3.0, 0.0, 0.0]);
        bad.levels.insert("musical".into(), 1.5);
        let err = validate_roster(&[bad]).unwrap_err();
        assert_eq!(err.len(), 3);
    }

    #[test]
    fn valid_roster_accepted_unchanged() {
        let students = vec![
            student("a", Gender::Man, [0.1, 0.2, 0.3, 0.4]),
            student("b", Gender::Woman, [-1.0, 1.0, -1.0, 1.0]),
            student("c", Gender::Man, [0.0; 4]),
        ];
        let roster = Roster::new(students.clone()).unwrap();
        assert_eq!(roster.students(), &students[..]);
        assert_eq!(roster.index_of("b"), Some(1));
    }

    #[test]
    fn task_type_weights_normalized() {
        let tt = TaskType::new("t", 0.5, [("a", 0.5, 2.0), ("b", 0.5, 6.0)]).unwrap();
        assert!((tt.requirements[0].weight - 0.25).abs() < 1e-12);
        let sum: f64 = tt.requirements.iter().map(|r| r.weight).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(TaskType::new("t", 0.5, [("a", 0.5, 1.0), ("a", 0.5, 1.0)]).is_err());
        assert!(TaskType::new::<&str>("t", 0.5, []).is_err());
        assert!(Task::new(tt, 1).is_err());
    }

    #[test]
    fn partition_validation() {
        let t = |v: Vec<usize>| Team::new(v).unwrap();
        let ok = Partition::new(vec![t(vec![0, 3]), t(vec![1, 2])]);
        ok.validate(4, 2).unwrap();
        let overlap = Partition::new(vec![t(vec![0, 1]), t(vec![1, 2])]);
        assert!(overlap.validate(4, 2).is_err());
        let sizes = Partition::new(vec![t(vec![0, 1, 2, 3])]);
        assert!(sizes.validate(4, 2).is_err());
        assert!(Team::new(vec![1]).is_err());
        assert!(Team::new(vec![1, 1]).is_err());
    }

    #[test]
    fn default_config_is_valid() {
        EvalConfig::default().validate().unwrap();
        let bad = EvalConfig {
            epsilon_floor: 1e-3,
            ..EvalConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
