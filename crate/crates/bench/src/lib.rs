//! Benchmark inputs shared by the criterion targets.

use fragilis::refclass::{read_csv, Strictness};
use fragilis::{assets, Metric};

/// Cost overrun ratios of the bundled synthetic dataset.
pub fn synthetic_cost_ratios() -> Vec<f64> {
    read_csv(assets::SYNTHETIC_DAMS.as_bytes(), "synthetic", Strictness::Strict)
        .expect("bundled dataset parses")
        .class
        .ratios(Metric::Cost)
}
