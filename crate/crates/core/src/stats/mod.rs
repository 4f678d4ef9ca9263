//! The statistical procedures applied to reference classes: Gaussian kernel
//! density traces, the Mann-Whitney U test, one-way ANOVA and the F test for
//! a linear trend.

mod anova;
mod kde;
mod mann_whitney;

use serde::{Deserialize, Serialize};

pub use anova::{one_way_f, trend_f, TrendResult};
pub use kde::{kde, silverman_bandwidth, DensityTrace, KDE_GRID_POINTS, KDE_SPAN_BANDWIDTHS};
pub use mann_whitney::{mann_whitney_u, EXACT_MAX_TOTAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

/// Outcome of a hypothesis test.
///
/// For the Mann-Whitney test `n` and `m` are the two sample sizes. For the F
/// tests they are the numerator and denominator degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n: usize,
    pub m: usize,
}
