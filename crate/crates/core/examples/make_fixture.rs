//! Regenerates the bundled synthetic project dataset.
//!
//! ```text
//! cargo run -p fragilis --example make_fixture > crates/core/assets/synthetic-dams.csv
//! python3 scripts/fixture_truth.py
//! ```
//!
//! Cost and schedule ratios come from the canonical distributions with one
//! draw per probability stratum, so the empirical quantiles track the anchors
//! closely even at n = 245.

use fragilis::assets;
use fragilis::refclass::{write_csv, ProjectRecord, ReferenceClass, Region};
use fragilis::stress::{TrialRng, VariableTag};

const N: u64 = 245;
const SEED: u64 = 20_140_310;

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

fn region_for(u: f64) -> Region {
    const CUTS: [(f64, Region); 6] = [
        (0.20, Region::NorthAmerica),
        (0.35, Region::SouthAmerica),
        (0.50, Region::Africa),
        (0.80, Region::Asia),
        (0.95, Region::Europe),
        (1.00, Region::Oceania),
    ];
    CUTS.iter().find(|(c, _)| u < *c).map(|(_, r)| *r).unwrap_or(Region::Oceania)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cost = assets::big_dam()?;
    let schedule = assets::big_dam_schedule()?;
    let rng = TrialRng::new(SEED);
    let types = ["hydroelectric", "hydroelectric", "multipurpose", "irrigation", "water_supply"];

    let mut records = Vec::new();
    for i in 0..N {
        // 97 and 53 are coprime with 245, so each maps ids onto a permutation of strata.
        let cost_stratum = (i * 97) % N;
        let sched_stratum = (i * 53) % N;
        let u_cost = (cost_stratum as f64 + rng.uniform(i, VariableTag::Capex)) / N as f64;
        let u_sched = (sched_stratum as f64 + rng.uniform(i, VariableTag::Schedule)) / N as f64;
        let u_misc = rng.uniform(i, VariableTag::Shortfall);

        let est_cost = round_to(50.0 + 4950.0 * rng.uniform(i + N, VariableTag::Capex), 1);
        let est_months = (36 + (i * 7) % 85) as f64;
        let (est_benefit, act_benefit) = if i % 3 == 0 {
            let est = round_to(est_cost * 1.4, 1);
            let shortfall = 0.3 * rng.uniform(i + N, VariableTag::Shortfall);
            (Some(est), Some(round_to(est * (1.0 - shortfall), 1)))
        } else {
            (None, None)
        };
        records.push(ProjectRecord {
            id: format!("SD{:03}", i + 1),
            name: format!("Synthetic dam {}", i + 1),
            country: format!("Synthland-{}", (i * 13) % 65 + 1),
            region: region_for(u_misc),
            project_type: types[(i % types.len() as u64) as usize].to_string(),
            decision_year: 1934 + ((i * 31) % 74) as i32,
            est_cost,
            act_cost: round_to(est_cost * cost.quantile(u_cost), 2),
            est_months,
            act_months: round_to(est_months * schedule.quantile(u_sched), 1),
            est_benefit,
            act_benefit,
        });
    }
    let class = ReferenceClass::new("synthetic-dams", records)?;
    write_csv(&class, std::io::stdout().lock())?;
    Ok(())
}
