//! Break a team's congeniality into its personality and gender terms.

use teamcomp::bench::synthetic_roster;
use teamcomp::evaluation::{congeniality, u_etj, u_gender, u_introvert, u_sntf};
use teamcomp::{EvalConfig, Team};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let roster = synthetic_roster(8, 2, 0.5);
    let config = EvalConfig::default();
    for members in [vec![0, 1, 2], vec![3, 4, 5, 6], vec![1, 7]] {
        let team = Team::new(members)?;
        let ids: Vec<_> = roster.ids(&team).collect();
        println!(
            "{:?}: sntf {:.4} + etj {:.4} + introvert {:.4} + gender {:.4} = {:.4}",
            ids,
            u_sntf(&team, &roster),
            u_etj(&team, &roster, config.alpha),
            u_introvert(&team, &roster, config.beta),
            u_gender(&team, &roster, config.gamma),
            congeniality(&team, &roster, &config),
        );
    }
    Ok(())
}
