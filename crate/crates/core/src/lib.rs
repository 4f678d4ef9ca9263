//! Investment fragility analysis for big capital projects.
//!
//! The crate is organised around five areas:
//!
//! * [`cashflow`]: discounting, NPV, BCR, IRR, the sorted payoff curve and
//!   break-even thresholds for cost overrun and schedule delay.
//! * [`refclass`]: historical project records, overrun and slippage ratios,
//!   deflation and summary statistics over reference classes.
//! * [`stats`]: kernel density traces, Mann-Whitney U, one-way and trend F tests.
//! * [`stress`]: quantile-anchored fat-tailed distributions and reproducible
//!   Monte Carlo stress testing of an appraisal.
//! * [`systems`]: the fragility quadrant map and weakest-component composition.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod cashflow;
mod error;
pub mod quantile;
pub mod refclass;
pub mod stats;
pub mod stress;
pub mod systems;

pub use cashflow::{AppraisalModel, AppraisalResult, CashFlow, CashFlowStream, PayoffCurve};
pub use error::{Error, Result};
pub use refclass::{Metric, ProjectRecord, ReferenceClass, Region, SummaryStats};
pub use stats::{DensityTrace, TestMethod, TestResult};
pub use stress::{QuantileDistribution, StressConfig, StressResult, Stressor};
pub use systems::{FragilityProfile, Quadrant, SystemGraph};
