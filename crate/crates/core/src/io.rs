//! Roster, task, partition and result files.
//!
//! JSON files carry `"schema": 1`; CSV files start with a `#schema=1` line.
//! Floats are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::CompetenceAssignment;
use crate::bench::{Algorithm, ExperimentResult};
use crate::error::{Error, Result};
use crate::evaluation::{Evaluator, PartitionScore};
use crate::model::{
    validate_roster, Gender, Partition, PersonalityProfile, Roster, Student, Task, TaskType, Team,
};
use crate::trace::AnytimeTrace;

pub const SCHEMA_VERSION: u32 = 1;
const SCHEMA_LINE: &str = "#schema=1";

/// Requirement levels, lowest first.
pub const LEVEL_LABELS: [&str; 5] = [
    "fundamental-awareness",
    "novice",
    "intermediate",
    "advanced",
    "expert",
];

/// Importance labels, lowest first.
pub const IMPORTANCE_LABELS: [&str; 5] = [
    "unimportant",
    "slightly-important",
    "important",
    "fairly-important",
    "very-important",
];

/// Evenly spaced values for the five labels. The lowest label maps to 0.2 so
/// that every stated requirement stays binding.
pub const LABEL_GRID: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

fn label_value(labels: &[&str; 5], label: &str) -> Result<f64> {
    let key = label.trim().to_ascii_lowercase().replace([' ', '_'], "-");
    labels
        .iter()
        .position(|l| *l == key)
        .map(|i| LABEL_GRID[i])
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

pub fn level_value(label: &str) -> Result<f64> {
    label_value(&LEVEL_LABELS, label)
}

pub fn importance_value(label: &str) -> Result<f64> {
    label_value(&IMPORTANCE_LABELS, label)
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))
}

fn check_schema(schema: Option<u32>, path: &str) -> Result<()> {
    match schema {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(Error::schema(
            path,
            format!("unsupported schema version {v}"),
        )),
    }
}

// ---- rosters ----

const ROSTER_FIELDS: [&str; 6] = ["id", "gender", "sn", "tf", "ei", "pj"];

/// Reads a roster from CSV or JSON. JSON is recognized by a `.json`
/// extension or a leading `[` / `{`.
pub fn parse_roster(path: &Path) -> Result<Roster> {
    let text = read_text(path)?;
    let is_json =
        path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with(['[', '{']);
    if is_json {
        parse_roster_json(&text, &path_str(path))
    } else {
        parse_roster_csv(&text, &path_str(path))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RosterJson {
    Bare(Vec<Student>),
    Versioned { schema: u32, students: Vec<Student> },
}

pub fn parse_roster_json(text: &str, origin: &str) -> Result<Roster> {
    // Parse as a generic value first so that errors carry serde's location.
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::schema(origin, e.to_string()))?;
    let students = match value {
        serde_json::Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value::<Student>(v)
                    .map_err(|e| Error::schema(origin, format!("student {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?,
        other => match serde_json::from_value::<RosterJson>(other) {
            Ok(RosterJson::Versioned { schema, students }) => {
                check_schema(Some(schema), origin)?;
                students
            }
            Ok(RosterJson::Bare(s)) => s,
            Err(_) => {
                return Err(Error::schema(
                    origin,
                    "expected an array of students or {\"schema\": 1, \"students\": [...]}",
                ))
            }
        },
    };
    Roster::new(students)
}

/// CSV columns: `id,gender,sn,tf,ei,pj` in that order, then one column per competence.
pub fn parse_roster_csv(text: &str, origin: &str) -> Result<Roster> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::schema(origin, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < ROSTER_FIELDS.len() || names[..6] != ROSTER_FIELDS {
        return Err(Error::schema(
            origin,
            format!(
                "header must start with {}, got {}",
                ROSTER_FIELDS.join(","),
                names.join(",")
            ),
        ));
    }
    let competences = &names[6..];
    for (i, c) in competences.iter().enumerate() {
        let well_formed = !c.is_empty()
            && c.chars()
                .all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_');
        if !well_formed || ROSTER_FIELDS.contains(c) || competences[..i].contains(c) {
            return Err(Error::schema(
                origin,
                format!("unknown or malformed column `{c}`"),
            ));
        }
    }

    let mut students = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::schema(origin, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |msg: String| Error::schema(origin, format!("line {line}: {msg}"));
        let num = |col: usize| -> Result<f64> {
            let raw = &record[col];
            raw.parse::<f64>()
                .map_err(|_| at(format!("column `{}`: `{raw}` is not a number", names[col])))
        };
        let gender: Gender = record[1].parse().map_err(|e: String| at(e))?;
        let profile = PersonalityProfile::new(num(2)?, num(3)?, num(4)?, num(5)?);
        let levels = (6..names.len())
            .map(|col| num(col).map(|v| (names[col].to_string(), v)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let student = Student {
            id: record[0].to_string(),
            gender,
            profile,
            levels,
        };
        if let Err(v) = validate_roster(std::slice::from_ref(&student)) {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            return Err(at(msgs.join("; ")));
        }
        students.push(student);
    }
    Roster::new(students)
}

/// Writes a roster as CSV with the union of all competences as columns.
pub fn write_roster_csv(roster: &Roster, w: impl Write) -> Result<()> {
    let competences: Vec<&String> = roster
        .students()
        .iter()
        .flat_map(|s| s.levels.keys())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> = ROSTER_FIELDS
        .iter()
        .copied()
        .chain(competences.iter().map(|c| c.as_str()))
        .collect();
    let csv_err = |e: csv::Error| Error::schema("roster csv", e.to_string());
    out.write_record(&header).map_err(csv_err)?;
    for s in roster.students() {
        let p = s.profile;
        let mut row = vec![
            s.id.clone(),
            s.gender.to_string(),
            p.sn.to_string(),
            p.tf.to_string(),
            p.ei.to_string(),
            p.pj.to_string(),
        ];
        row.extend(competences.iter().map(|c| s.level(c).to_string()));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("roster csv", e))
}

#[derive(Serialize)]
struct RosterOut<'a> {
    schema: u32,
    students: &'a [Student],
}

pub fn write_roster_json(roster: &Roster, w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(
        w,
        &RosterOut {
            schema: SCHEMA_VERSION,
            students: roster.students(),
        },
    )
    .map_err(|e| Error::schema("roster json", e.to_string()))
}

// ---- tasks ----

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Graded {
    Value(f64),
    Label(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementSpec {
    pub competence: String,
    pub level: Graded,
    pub importance: Graded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub lambda: f64,
    pub m: usize,
    pub requirements: Vec<RequirementSpec>,
}

impl TaskFile {
    pub fn into_task(self) -> Result<Task> {
        let resolve = |g: &Graded, f: fn(&str) -> Result<f64>| match g {
            Graded::Value(v) => Ok(*v),
            Graded::Label(l) => f(l),
        };
        let reqs = self
            .requirements
            .iter()
            .map(|r| {
                Ok((
                    r.competence.clone(),
                    resolve(&r.level, level_value)?,
                    resolve(&r.importance, importance_value)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let tt = TaskType::new(
            self.name.unwrap_or_else(|| "task".into()),
            self.lambda,
            reqs,
        )?;
        Task::new(tt, self.m)
    }

    pub fn from_task(task: &Task) -> Self {
        TaskFile {
            schema: Some(SCHEMA_VERSION),
            name: Some(task.task_type.name.clone()),
            lambda: task.lambda(),
            m: task.m,
            requirements: task
                .task_type
                .requirements
                .iter()
                .map(|r| RequirementSpec {
                    competence: r.competence.clone(),
                    level: Graded::Value(r.level),
                    importance: Graded::Value(r.weight),
                })
                .collect(),
        }
    }
}

pub fn parse_task(path: &Path) -> Result<Task> {
    parse_task_str(&read_text(path)?, &path_str(path))
}

pub fn parse_task_str(text: &str, origin: &str) -> Result<Task> {
    let file: TaskFile =
        serde_json::from_str(text).map_err(|e| Error::schema(origin, e.to_string()))?;
    check_schema(file.schema, origin)?;
    file.into_task()
}

// ---- partitions ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignedCompetence {
    pub competence: String,
    pub student: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamEntry {
    pub members: Vec<String>,
    pub s: f64,
    pub u_prof: f64,
    pub u_con: f64,
    pub assignment: Vec<AssignedCompetence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub schema: u32,
    pub task: String,
    pub m: usize,
    pub lambda: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "log_S")]
    pub log_s: f64,
    pub teams: Vec<TeamEntry>,
}

impl PartitionFile {
    /// Scores every team of `partition` and records the witnessing assignments.
    pub fn build(partition: &Partition, eval: &Evaluator<'_>) -> Self {
        let roster = eval.roster();
        let task = eval.task();
        let canonical = partition.canonical();
        let teams: Vec<TeamEntry> = canonical
            .teams()
            .iter()
            .map(|team| {
                let rec = eval.record(team);
                TeamEntry {
                    members: roster.ids(team).map(String::from).collect(),
                    s: rec.s,
                    u_prof: rec.u_prof,
                    u_con: rec.u_con,
                    assignment: rec
                        .assignment
                        .owners()
                        .iter()
                        .zip(&task.task_type.requirements)
                        .map(|(&o, r)| AssignedCompetence {
                            competence: r.competence.clone(),
                            student: roster.get(o).id.clone(),
                        })
                        .collect(),
                }
            })
            .collect();
        let score = PartitionScore::from_values(teams.iter().map(|t| t.s), eval.floor());
        PartitionFile {
            schema: SCHEMA_VERSION,
            task: task.task_type.name.clone(),
            m: task.m,
            lambda: task.lambda(),
            s: score.value,
            log_s: score.log_value,
            teams,
        }
    }

    /// Resolves member ids against `roster`, returning the partition and the
    /// recorded assignment of each team.
    pub fn resolve(
        &self,
        roster: &Roster,
        task: &Task,
    ) -> Result<(Partition, Vec<CompetenceAssignment>)> {
        let index = |id: &str| {
            roster
                .index_of(id)
                .ok_or_else(|| Error::InvalidPartition(format!("unknown student `{id}`")))
        };
        let mut teams = Vec::new();
        let mut assignments = Vec::new();
        for entry in &self.teams {
            let members = entry
                .members
                .iter()
                .map(|id| index(id))
                .collect::<Result<Vec<_>>>()?;
            let team = Team::new(members)?;
            let mut mapping: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for a in &entry.assignment {
                mapping
                    .entry(index(&a.student)?)
                    .or_default()
                    .push(a.competence.clone());
            }
            let assignment = CompetenceAssignment::from_mapping(&mapping, &task.task_type)?;
            assignment.validate(&team, &task.task_type)?;
            teams.push(team);
            assignments.push(assignment);
        }
        let partition = Partition::new(teams);
        partition.validate(roster.len(), task.m)?;
        Ok((partition, assignments))
    }
}

pub fn write_partition(path: &Path, file: &PartitionFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file)
        .map_err(|e| Error::schema(path_str(path), e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path_str(path), e))
}

pub fn read_partition(path: &Path) -> Result<PartitionFile> {
    let origin = path_str(path);
    let file: PartitionFile = serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::schema(&origin, e.to_string()))?;
    check_schema(Some(file.schema), &origin)?;
    Ok(file)
}

/// Outcome of re-scoring a partition file.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub recomputed: PartitionFile,
    pub recorded_s: f64,
    /// Human-readable differences between recorded and recomputed values.
    pub mismatches: Vec<String>,
}

/// Re-scores a partition file from scratch and compares it with what it records.
pub fn rescore(file: &PartitionFile, eval: &Evaluator<'_>, tol: f64) -> Result<EvalReport> {
    let roster = eval.roster();
    let task = eval.task();
    let (partition, recorded_assignments) = file.resolve(roster, task)?;
    let recomputed = PartitionFile::build(&partition, eval);
    let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
    let mut mismatches = Vec::new();
    for ((entry, team), assignment) in file
        .teams
        .iter()
        .zip(partition.teams())
        .zip(&recorded_assignments)
    {
        let label = entry.members.join(",");
        let fresh = recomputed
            .teams
            .iter()
            .find(|t| {
                let mut a = t.members.clone();
                let mut b = entry.members.clone();
                a.sort();
                b.sort();
                a == b
            })
            .expect("recomputed from the same partition");
        if !close(entry.s, fresh.s) {
            mismatches.push(format!(
                "team [{label}]: recorded s {} vs {}",
                entry.s, fresh.s
            ));
        }
        // The recorded assignment must be as good as the optimal one.
        let witnessed =
            crate::assignment::under_proficiency(team, &task.task_type, assignment, roster)
                .and_then(|u| {
                    crate::assignment::over_proficiency(team, &task.task_type, assignment, roster)
                        .map(|o| {
                            1.0 - (eval.config().upsilon * u + (1.0 - eval.config().upsilon) * o)
                        })
                })?;
        if !close(witnessed, fresh.u_prof) {
            mismatches.push(format!(
                "team [{label}]: recorded assignment gives u_prof {witnessed} vs optimum {}",
                fresh.u_prof
            ));
        }
    }
    if !close(file.s, recomputed.s) {
        mismatches.push(format!("recorded S {} vs {}", file.s, recomputed.s));
    }
    Ok(EvalReport {
        recorded_s: file.s,
        recomputed,
        mismatches,
    })
}

// ---- CSV ----

/// CSV writer that emits the `#schema=1` line before the header.
pub struct SchemaCsvWriter {
    inner: csv::Writer<BufWriter<File>>,
    path: String,
}

impl SchemaCsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let p = path_str(path);
        let mut file = BufWriter::new(File::create(path).map_err(|e| Error::io(&p, e))?);
        writeln!(file, "{SCHEMA_LINE}").map_err(|e| Error::io(&p, e))?;
        let mut inner = csv::Writer::from_writer(file);
        inner
            .write_record(header)
            .map_err(|e| Error::schema(&p, e.to_string()))?;
        Ok(Self { inner, path: p })
    }

    pub fn write<S: AsRef<[u8]>>(&mut self, row: &[S]) -> Result<()> {
        self.inner
            .write_record(row)
            .map_err(|e| Error::schema(&self.path, e.to_string()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn schema_csv_reader<'a>(text: &'a str, origin: &str) -> Result<csv::Reader<&'a [u8]>> {
    if text.lines().next().map(str::trim) != Some(SCHEMA_LINE) {
        return Err(Error::schema(
            origin,
            format!("missing `{SCHEMA_LINE}` line"),
        ));
    }
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes()))
}

pub const RESULTS_HEADER: [&str; 11] = [
    "label",
    "algorithm",
    "n",
    "m",
    "lambda",
    "task",
    "seed",
    "gen_time_s",
    "solve_time_s",
    "best_S",
    "ratio",
];

pub const TRACE_HEADER: [&str; 5] = ["label", "algorithm", "seed", "elapsed_s", "best_S"];

pub fn write_results_csv(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    let mut w = SchemaCsvWriter::create(path, &RESULTS_HEADER)?;
    for r in results {
        w.write(&[
            r.label.clone(),
            r.algorithm.id().to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.lambda.to_string(),
            r.task.clone(),
            r.seed.to_string(),
            r.gen_time_s.to_string(),
            r.solve_time_s.to_string(),
            r.best_s.to_string(),
            r.ratio.map(|q| q.to_string()).unwrap_or_default(),
        ])?;
    }
    w.finish()
}

#[derive(Deserialize)]
struct ResultRow {
    label: String,
    algorithm: String,
    n: usize,
    m: usize,
    lambda: f64,
    task: String,
    seed: u64,
    gen_time_s: f64,
    solve_time_s: f64,
    #[serde(rename = "best_S")]
    best_s: f64,
    ratio: Option<f64>,
}

/// Reads a results CSV. Traces are not stored there and come back empty.
pub fn read_results_csv(path: &Path) -> Result<Vec<ExperimentResult>> {
    let origin = path_str(path);
    let text = read_text(path)?;
    let mut reader = schema_csv_reader(&text, &origin)?;
    reader
        .deserialize::<ResultRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::schema(&origin, e.to_string()))?;
            let algorithm = Algorithm::from_id(&row.algorithm)
                .ok_or_else(|| Error::UnknownLabel(row.algorithm.clone()))?;
            Ok(ExperimentResult {
                label: row.label,
                algorithm,
                n: row.n,
                m: row.m,
                lambda: row.lambda,
                task: row.task,
                seed: row.seed,
                gen_time_s: row.gen_time_s,
                solve_time_s: row.solve_time_s,
                best_s: row.best_s,
                best_log_s: row.best_s.ln(),
                ratio: row.ratio,
                trace: AnytimeTrace::new(),
            })
        })
        .collect()
}

/// One trace row per improvement.
pub struct TraceRows<'a> {
    pub label: &'a str,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub trace: &'a AnytimeTrace,
}

pub fn write_traces_csv<'a>(
    path: &Path,
    traces: impl IntoIterator<Item = TraceRows<'a>>,
) -> Result<()> {
    let mut w = SchemaCsvWriter::create(path, &TRACE_HEADER)?;
    for t in traces {
        for p in t.trace.points() {
            w.write(&[
                t.label.to_string(),
                t.algorithm.id().to_string(),
                t.seed.to_string(),
                p.elapsed_s.to_string(),
                p.best.value.to_string(),
            ])?;
        }
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub label: String,
    pub algorithm: String,
    pub seed: u64,
    pub elapsed_s: f64,
    #[serde(rename = "best_S")]
    pub best_s: f64,
}

pub fn read_traces_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let origin = path_str(path);
    let text = read_text(path)?;
    let mut reader = schema_csv_reader(&text, &origin)?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::schema(&origin, e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{synthetic_roster, task_library};
    use crate::model::EvalConfig;

    const TWO_ROWS: &str = "id,gender,sn,tf,ei,pj,linguistic\n\
                            b,woman,0.5,-0.5,0.1,0,0.3\n\
                            a,man,-1,1,0,0.25,0.9\n";

    #[test]
    fn csv_two_rows_sorted_by_id() {
        let r = parse_roster_csv(TWO_ROWS, "t.csv").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.get(0).id, "a");
        assert_eq!(r.get(0).level("linguistic"), 0.9);
    }

    #[test]
    fn csv_gender_other_names_the_line() {
        let text = TWO_ROWS.replace("woman", "other");
        let err = parse_roster_csv(&text, "t.csv").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("other"), "{err}");
    }

    #[test]
    fn csv_rejects_bad_columns() {
        for header in [
            "id,gender,sn,tf,pj,ei,linguistic",
            "id,gender,sn,tf,ei,pj,Linguistic",
            "id,gender,sn,tf,ei,pj,x,x",
            "id,gender,sn,tf,ei,pj,sn",
        ] {
            let text = format!("{header}\n");
            assert!(matches!(
                parse_roster_csv(&text, "t.csv"),
                Err(Error::Schema { .. })
            ));
        }
    }

    #[test]
    fn csv_range_violation() {
        let text = TWO_ROWS.replace("0.5,-0.5", "1.2,-0.5");
        let err = parse_roster_csv(&text, "t.csv").unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn json_and_csv_agree() {
        let roster = synthetic_roster(9, 4, 0.5);
        let mut csv_bytes = Vec::new();
        write_roster_csv(&roster, &mut csv_bytes).unwrap();
        let mut json_bytes = Vec::new();
        write_roster_json(&roster, &mut json_bytes).unwrap();
        let a = parse_roster_csv(std::str::from_utf8(&csv_bytes).unwrap(), "r.csv").unwrap();
        let b = parse_roster_json(std::str::from_utf8(&json_bytes).unwrap(), "r.json").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, roster);
        let bare = serde_json::to_string(roster.students()).unwrap();
        assert_eq!(parse_roster_json(&bare, "r.json").unwrap(), roster);
    }

    #[test]
    fn label_mapping() {
        assert_eq!(level_value("novice").unwrap(), 0.4);
        assert_eq!(level_value("Fundamental awareness").unwrap(), 0.2);
        assert_eq!(importance_value("very-important").unwrap(), 1.0);
        let err = importance_value("super-important").unwrap_err();
        assert!(err.to_string().contains("super-important"));
    }

    #[test]
    fn arts_design_labels_normalize() {
        let text = r#"{"lambda": 0.8, "m": 3, "requirements": [
            {"competence": "linguistic", "level": "novice", "importance": "slightly-important"},
            {"competence": "visual_spatial", "level": "advanced", "importance": "very-important"},
            {"competence": "intrapersonal", "level": "intermediate", "importance": "fairly-important"}
        ]}"#;
        let task = parse_task_str(text, "arts.json").unwrap();
        let w: Vec<f64> = task
            .task_type
            .requirements
            .iter()
            .map(|r| r.weight)
            .collect();
        for (got, want) in w.iter().zip([0.4 / 2.2, 1.0 / 2.2, 0.8 / 2.2]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(task.m, 3);
    }

    #[test]
    fn numeric_levels_pass_through() {
        let text = r#"{"lambda": 0.5, "m": 2, "requirements": [
            {"competence": "a", "level": 0.37, "importance": 1},
            {"competence": "b", "level": 0.9, "importance": 3}
        ]}"#;
        let task = parse_task_str(text, "t.json").unwrap();
        assert_eq!(task.task_type.requirements[0].level, 0.37);
        assert_eq!(task.task_type.requirements[1].weight, 0.75);
    }

    #[test]
    fn task_errors() {
        let base = |m: usize, reqs: &str| {
            format!(r#"{{"lambda": 0.5, "m": {m}, "requirements": [{reqs}]}}"#)
        };
        let one = r#"{"competence": "a", "level": "expert", "importance": "super-important"}"#;
        assert!(
            matches!(parse_task_str(&base(2, one), "t"), Err(Error::UnknownLabel(l)) if l == "super-important")
        );
        let ok = r#"{"competence": "a", "level": 0.5, "importance": 1}"#;
        assert!(parse_task_str(&base(1, ok), "t").is_err());
        assert!(parse_task_str(&base(2, ""), "t").is_err());
    }

    #[test]
    fn partition_file_round_trip() {
        let roster = synthetic_roster(10, 1, 0.5);
        let task = Task::new(task_library()[1].clone(), 3).unwrap();
        let cfg = EvalConfig::default();
        let eval = Evaluator::new(&roster, &task, &cfg).unwrap();
        let (sol, _) = crate::synteam::run_synteam_with(
            &eval,
            &crate::synteam::SynTeamParams::for_instance(10, 3, 5).unwrap(),
        )
        .unwrap();
        let file = PartitionFile::build(&sol.partition, &eval);
        assert!((file.s - sol.score.value).abs() < 1e-12);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        write_partition(&path, &file).unwrap();
        let back = read_partition(&path).unwrap();
        assert_eq!(back, file);
        let report = rescore(&back, &eval, 1e-9).unwrap();
        assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
        assert!((report.recomputed.s - file.s).abs() < 1e-9);
    }

    #[test]
    fn rescore_flags_tampering() {
        let roster = synthetic_roster(6, 2, 0.5);
        let task = Task::new(task_library()[2].clone(), 3).unwrap();
        let cfg = EvalConfig::default();
        let eval = Evaluator::new(&roster, &task, &cfg).unwrap();
        let partition = Partition::new(vec![
            Team::new(vec![0, 1, 2]).unwrap(),
            Team::new(vec![3, 4, 5]).unwrap(),
        ]);
        let mut file = PartitionFile::build(&partition, &eval);
        file.s *= 1.5;
        file.teams[0].s += 0.25;
        let report = rescore(&file, &eval, 1e-9).unwrap();
        assert_eq!(report.mismatches.len(), 2);

        file.teams[0].members.pop();
        assert!(rescore(&file, &eval, 1e-9).is_err());
    }

    #[test]
    fn results_and_traces_round_trip() {
        let grid = crate::bench::Grid {
            n_values: vec![8],
            m_values: vec![2],
            lambdas: vec![0.8],
            repeats: 2,
            ..Default::default()
        };
        let report = crate::bench::run_matrix(&grid, &[Algorithm::Exact, Algorithm::SynTeam]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        write_results_csv(&path, &report.results).unwrap();
        let back = read_results_csv(&path).unwrap();
        assert_eq!(back.len(), report.results.len());
        for (a, b) in back.iter().zip(&report.results) {
            assert_eq!(
                (&a.label, a.algorithm, a.n, a.m, a.seed),
                (&b.label, b.algorithm, b.n, b.m, b.seed)
            );
            assert_eq!(a.best_s, b.best_s);
            assert_eq!(a.ratio, b.ratio);
            assert_eq!(a.solve_time_s, b.solve_time_s);
        }

        let tpath = dir.path().join("trace.csv");
        write_traces_csv(
            &tpath,
            report.results.iter().map(|r| TraceRows {
                label: &r.label,
                algorithm: r.algorithm,
                seed: r.seed,
                trace: &r.trace,
            }),
        )
        .unwrap();
        let rows = read_traces_csv(&tpath).unwrap();
        let expected: usize = report.results.iter().map(|r| r.trace.len()).sum();
        assert_eq!(rows.len(), expected);
    }

    #[test]
    fn csv_without_schema_line_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, RESULTS_HEADER.join(",") + "\n").unwrap();
        assert!(matches!(read_results_csv(&path), Err(Error::Schema { .. })));
    }
}
