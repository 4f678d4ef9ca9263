//! Bundled data assets.
//!
//! The reference-class distributions, a stylized BCR-1.4 dam appraisal and a
//! 245-row synthetic project dataset. The synthetic rows are drawn from the
//! canonical cost and schedule distributions and are not real projects.

use crate::cashflow::AppraisalModel;
use crate::stress::{QuantileDistSpec, QuantileDistribution};
use crate::Result;

pub const BIG_DAM: &str = include_str!("../assets/big-dam.json");
pub const BIG_DAM_SCHEDULE: &str = include_str!("../assets/big-dam-schedule.json");
pub const STYLIZED_DAM: &str = include_str!("../assets/stylized-dam.json");
pub const SYNTHETIC_DAMS: &str = include_str!("../assets/synthetic-dams.csv");
pub const SYNTHETIC_DAMS_TRUTH: &str = include_str!("../assets/synthetic-dams.truth.json");

/// `(name, file name, contents)` of every bundled asset.
pub const ALL: [(&str, &str, &str); 5] = [
    ("big-dam", "big-dam.json", BIG_DAM),
    ("big-dam-schedule", "big-dam-schedule.json", BIG_DAM_SCHEDULE),
    ("stylized-dam", "stylized-dam.json", STYLIZED_DAM),
    ("synthetic-dams", "synthetic-dams.csv", SYNTHETIC_DAMS),
    ("synthetic-dams-truth", "synthetic-dams.truth.json", SYNTHETIC_DAMS_TRUTH),
];

/// Looks an asset up by name or file name.
pub fn find(name: &str) -> Option<(&'static str, &'static str)> {
    ALL.iter()
        .find(|(n, f, _)| *n == name || *f == name)
        .map(|(_, f, c)| (*f, *c))
}

pub fn big_dam() -> Result<QuantileDistribution> {
    serde_json::from_str::<QuantileDistSpec>(BIG_DAM)?.build()
}

pub fn big_dam_schedule() -> Result<QuantileDistribution> {
    serde_json::from_str::<QuantileDistSpec>(BIG_DAM_SCHEDULE)?.build()
}

pub fn stylized_dam() -> Result<AppraisalModel> {
    Ok(serde_json::from_str(STYLIZED_DAM)?)
}
