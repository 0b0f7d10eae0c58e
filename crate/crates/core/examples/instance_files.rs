//! Write a roster, read it back, solve, and re-score the saved partition.

use teamcomp::bench::synthetic_roster;
use teamcomp::exact::{solve_exact, ExactOptions};
use teamcomp::io::{
    parse_roster, parse_task_str, read_partition, rescore, write_partition, write_roster_csv,
    PartitionFile,
};
use teamcomp::{EvalConfig, Evaluator};

const TASK: &str = r#"{"name": "arts-design", "lambda": 0.8, "m": 3, "requirements": [
    {"competence": "linguistic", "level": "novice", "importance": "slightly-important"},
    {"competence": "visual_spatial", "level": "advanced", "importance": "very-important"},
    {"competence": "intrapersonal", "level": "intermediate", "importance": "fairly-important"}
]}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("teamcomp-instance-files");
    std::fs::create_dir_all(&dir)?;
    let roster_path = dir.join("roster.csv");
    write_roster_csv(
        &synthetic_roster(9, 1, 0.5),
        std::fs::File::create(&roster_path)?,
    )?;

    let roster = parse_roster(&roster_path)?;
    let task = parse_task_str(TASK, "inline")?;
    let config = EvalConfig::default();
    let sol = solve_exact(&roster, &task, &config, &ExactOptions::default())?;

    let eval = Evaluator::new(&roster, &task, &config)?;
    let out = dir.join("partition.json");
    write_partition(&out, &PartitionFile::build(&sol.solution.partition, &eval))?;
    let report = rescore(&read_partition(&out)?, &eval, 1e-9)?;
    println!("wrote {}", out.display());
    println!(
        "S = {:.6}, re-scored {:.6}, {} mismatches",
        report.recorded_s,
        report.recomputed.s,
        report.mismatches.len()
    );
    Ok(())
}
