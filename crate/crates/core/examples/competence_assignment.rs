//! Balanced competence assignment for one team, checked against enumeration.

use teamcomp::assignment::{brute_force_assignment, solve_balanced_assignment};
use teamcomp::bench::{synthetic_roster, task_library};
use teamcomp::Team;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let roster = synthetic_roster(5, 4, 0.5);
    let team = Team::new(vec![0, 1, 2, 3])?;
    let task_type = &task_library()[1];
    let upsilon = 0.5;

    let res = solve_balanced_assignment(&team, task_type, upsilon, &roster)?;
    println!("task {}: u_prof = {:.6}", task_type.name, res.u_prof);
    println!("under = {:.6}, over = {:.6}", res.under, res.over);
    for (&owner, req) in res.assignment.owners().iter().zip(&task_type.requirements) {
        let s = roster.get(owner);
        println!(
            "  {:<16} -> {} (has {:.2}, needs {:.2}, weight {:.3})",
            req.competence,
            s.id,
            s.level(&req.competence),
            req.level,
            req.weight
        );
    }

    let brute = brute_force_assignment(&team, task_type, upsilon, &roster)?;
    println!(
        "enumeration agrees: {}",
        (brute.u_prof - res.u_prof).abs() < 1e-12
    );
    Ok(())
}
