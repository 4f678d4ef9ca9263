//! Monte Carlo stress testing of an appraisal, sensitivity grids and
//! contingency sizing.
//!
//! Each trial draws a capex multiplier `k`, a delay `d` and a benefit
//! shortfall `s` independently, stresses the model with
//! [`apply_stress`](crate::cashflow::apply_stress)`(k, 1 - s, d)` and records
//! whether the BCR fell below 1.

mod dist;
mod rng;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cashflow::{apply_stress, irr, AppraisalModel};
use crate::quantile::quantile_sorted;
use crate::refclass::QuantilePoint;
use crate::{Error, Result};

pub use dist::{
    build_quantile_dist, p_break_analytic, sample, Anchor, GpdTail, QuantileDistSpec, QuantileDistribution,
    TailSpec, CALIBRATION_SHAPE_RANGE, DEFAULT_FLOOR_X,
};
pub use rng::{TrialRng, VariableTag};

/// NPV quantile levels reported unless a config asks for others.
pub const DEFAULT_NPV_QUANTILES: [f64; 7] = [0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95];

/// A stressed input: either a fixed value or a distribution sampled per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stressor {
    Fixed(f64),
    Distribution(QuantileDistribution),
}

impl Stressor {
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Stressor::Fixed(v) => *v,
            Stressor::Distribution(d) => d.quantile(p),
        }
    }

    fn draw(&self, rng: &TrialRng, trial: u64, tag: VariableTag) -> f64 {
        match self {
            Stressor::Fixed(v) => *v,
            Stressor::Distribution(d) => d.quantile(rng.uniform(trial, tag)),
        }
    }
}

/// Schedule slippage ratios turn into years of delay as
/// `(slippage - 1) * estimated_duration_years`, floored at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStress {
    pub slippage: Stressor,
    pub est_duration_years: f64,
}

fn default_shortfall() -> Stressor {
    Stressor::Fixed(0.0)
}

fn default_npv_quantiles() -> Vec<f64> {
    DEFAULT_NPV_QUANTILES.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    pub n_trials: u64,
    pub seed: u64,
    /// Capex overrun multiplier.
    pub capex_dist: Stressor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_dist: Option<ScheduleStress>,
    /// Benefit shortfall fraction; draws are clamped to `[0, 1]`.
    #[serde(default = "default_shortfall")]
    pub shortfall: Stressor,
    #[serde(default = "default_npv_quantiles")]
    pub npv_quantiles: Vec<f64>,
}

impl StressConfig {
    /// Capex-only stress with the default NPV quantiles.
    pub fn capex_only(n_trials: u64, seed: u64, capex: Stressor) -> Self {
        Self {
            n_trials,
            seed,
            capex_dist: capex,
            schedule_dist: None,
            shortfall: default_shortfall(),
            npv_quantiles: default_npv_quantiles(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidInput("n_trials must be at least 1".into()));
        }
        if let Stressor::Fixed(k) = self.capex_dist {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::InvalidInput(format!("fixed capex multiplier {k} must be >= 0")));
            }
        }
        if let Some(s) = &self.schedule_dist {
            if !(s.est_duration_years.is_finite() && s.est_duration_years >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "estimated duration {} must be >= 0",
                    s.est_duration_years
                )));
            }
        }
        if let Some(p) = self.npv_quantiles.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInput(format!("NPV quantile level {p} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressResult {
    pub n_trials: u64,
    pub seed: u64,
    pub base_bcr: f64,
    /// Share of trials with BCR below 1.
    pub p_break: f64,
    /// `sqrt(p (1 - p) / n)`.
    pub p_break_se: f64,
    pub mean_npv: f64,
    pub npv_quantiles: Vec<QuantilePoint>,
}

impl StressResult {
    /// `p,npv` CSV of the NPV quantiles.
    pub fn write_quantiles_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["p", "npv"])?;
        for q in &self.npv_quantiles {
            w.write_record([q.p.to_string(), q.value.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Neumaier-compensated sum, evaluated in slice order.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Runs the stress test on the current rayon pool.
pub fn run_stress(model: &AppraisalModel, config: &StressConfig) -> Result<StressResult> {
    config.validate()?;
    let pv = model.present_values();
    let rng = TrialRng::new(config.seed);

    let outcomes: Vec<(f64, bool)> = (0..config.n_trials)
        .into_par_iter()
        .map(|i| {
            let k = config.capex_dist.draw(&rng, i, VariableTag::Capex);
            let d = config.schedule_dist.as_ref().map_or(0.0, |s| {
                let slip = s.slippage.draw(&rng, i, VariableTag::Schedule);
                ((slip - 1.0) * s.est_duration_years).max(0.0)
            });
            let s = config.shortfall.draw(&rng, i, VariableTag::Shortfall).clamp(0.0, 1.0);
            let stressed = pv.stressed(k, 1.0 - s, d);
            (stressed.npv(), stressed.gain / stressed.pain < 1.0)
        })
        .collect();

    // Aggregation runs sequentially in trial order so the result does not
    // depend on how trials were scheduled.
    let n = outcomes.len() as f64;
    let broken = outcomes.iter().filter(|o| o.1).count();
    let p_break = broken as f64 / n;
    let mean_npv = compensated_sum(outcomes.iter().map(|o| o.0)) / n;
    let mut npvs: Vec<f64> = outcomes.into_iter().map(|o| o.0).collect();
    npvs.sort_by(f64::total_cmp);
    Ok(StressResult {
        n_trials: config.n_trials,
        seed: config.seed,
        base_bcr: pv.bcr()?,
        p_break,
        p_break_se: (p_break * (1.0 - p_break) / n).sqrt(),
        mean_npv,
        npv_quantiles: config
            .npv_quantiles
            .iter()
            .map(|&p| QuantilePoint {
                p,
                value: quantile_sorted(&npvs, p),
            })
            .collect(),
    })
}

/// [`run_stress`] on a dedicated pool with `threads` workers.
pub fn run_stress_with_threads(model: &AppraisalModel, config: &StressConfig, threads: usize) -> Result<StressResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_stress(model, config))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub cost_mult: f64,
    pub benefit_mult: f64,
    pub bcr: f64,
    pub npv: f64,
    pub irr: Option<f64>,
}

/// Appraisals over a benefit x cost multiplier grid: one row per cost
/// multiplier, one column per benefit multiplier, both in the given order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub benefit_mults: Vec<f64>,
    pub cost_mults: Vec<f64>,
    pub cells: Vec<Vec<GridCell>>,
}

impl SensitivityGrid {
    pub fn cell(&self, cost_idx: usize, benefit_idx: usize) -> &GridCell {
        &self.cells[cost_idx][benefit_idx]
    }

    /// Long-format CSV, one line per cell. Absent IRRs are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cost_mult", "benefit_mult", "bcr", "npv", "irr"])?;
        for c in self.cells.iter().flatten() {
            w.write_record([
                c.cost_mult.to_string(),
                c.benefit_mult.to_string(),
                c.bcr.to_string(),
                c.npv.to_string(),
                c.irr.map(|r| r.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn sensitivity_grid(model: &AppraisalModel, benefit_mults: &[f64], cost_mults: &[f64]) -> Result<SensitivityGrid> {
    if let Some(m) = benefit_mults.iter().chain(cost_mults).find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::InvalidInput(format!("multiplier {m} must be positive")));
    }
    let cells = cost_mults
        .iter()
        .map(|&k| {
            benefit_mults
                .iter()
                .map(|&b| {
                    let stressed = apply_stress(model, k, b, 0.0)?;
                    let pv = stressed.present_values();
                    Ok(GridCell {
                        cost_mult: k,
                        benefit_mult: b,
                        bcr: pv.bcr()?,
                        npv: pv.npv(),
                        irr: irr(&stressed.net_stream()),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityGrid {
        benefit_mults: benefit_mults.to_vec(),
        cost_mults: cost_mults.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    pub coverage: f64,
    /// Budget uplift as a fraction of the capex estimate.
    pub contingency: f64,
    /// BCR with capex scaled by `1 + contingency`.
    pub adjusted_bcr: f64,
    pub proceed: bool,
}

/// Sizes a contingency to the `coverage` quantile of the capex overrun
/// distribution and re-appraises with it.
pub fn size_contingency(model: &AppraisalModel, capex: &Stressor, coverage: f64) -> Result<Contingency> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::Domain(format!("coverage {coverage} outside (0, 1)")));
    }
    let c = capex.quantile(coverage) - 1.0;
    let adjusted_bcr = model.present_values().stressed(1.0 + c, 1.0, 0.0).bcr()?;
    Ok(Contingency {
        coverage,
        contingency: c,
        adjusted_bcr,
        proceed: adjusted_bcr > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cashflow::{bcr, CashFlowStream};
    use approx::assert_relative_eq;

    fn dam_dist() -> QuantileDistribution {
        let anchors: Vec<Anchor> = [(0.25, 1.00), (0.50, 1.27), (0.53, 1.40), (0.75, 1.86), (0.80, 1.99), (0.90, 3.07)]
            .iter()
            .map(|&(p, x)| Anchor::new(p, x))
            .collect();
        build_quantile_dist(&anchors, DEFAULT_FLOOR_X, TailSpec::CalibrateMean(1.96)).unwrap()
    }

    fn bcr14() -> AppraisalModel {
        AppraisalModel::new(
            0.0,
            CashFlowStream::from_pairs(&[(0.0, 100.0)]).unwrap(),
            CashFlowStream::default(),
            CashFlowStream::from_pairs(&[(1.0, 140.0)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_stress_never_breaks() {
        let cfg = StressConfig {
            schedule_dist: Some(ScheduleStress {
                slippage: Stressor::Fixed(1.0),
                est_duration_years: 5.0,
            }),
            ..StressConfig::capex_only(1000, 3, Stressor::Fixed(1.0))
        };
        let r = run_stress(&bcr14(), &cfg).unwrap();
        assert_eq!(r.p_break, 0.0);
        assert_eq!(r.p_break_se, 0.0);
        assert_relative_eq!(r.mean_npv, 40.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_stress(&bcr14(), &StressConfig::capex_only(0, 1, Stressor::Fixed(1.0))).is_err());
    }

    #[test]
    fn capex_only_matches_analytic() {
        let dist = dam_dist();
        let cfg = StressConfig::capex_only(200_000, 11, Stressor::Distribution(dist.clone()));
        let r = run_stress(&bcr14(), &cfg).unwrap();
        let analytic = p_break_analytic(&dist, 1.4).unwrap();
        assert!((r.p_break - analytic).abs() < 4.0 * r.p_break_se, "{} vs {analytic}", r.p_break);
    }

    #[test]
    fn shortfall_and_delay_raise_break_probability() {
        let dist = Stressor::Distribution(dam_dist());
        let m = AppraisalModel::new(
            0.1,
            CashFlowStream::from_pairs(&[(0.0, 100.0)]).unwrap(),
            CashFlowStream::default(),
            CashFlowStream::from_pairs(&[(1.0, 77.0), (2.0, 84.7)]).unwrap(),
        )
        .unwrap();
        let base = run_stress(&m, &StressConfig::capex_only(20_000, 5, dist.clone())).unwrap();
        let harsher = StressConfig {
            schedule_dist: Some(ScheduleStress {
                slippage: Stressor::Fixed(1.5),
                est_duration_years: 4.0,
            }),
            shortfall: Stressor::Fixed(0.11),
            ..StressConfig::capex_only(20_000, 5, dist)
        };
        let stressed = run_stress(&m, &harsher).unwrap();
        assert!(stressed.p_break > base.p_break);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let cfg = StressConfig::capex_only(10_000, 99, Stressor::Distribution(dam_dist()));
        let a = run_stress_with_threads(&bcr14(), &cfg, 1).unwrap();
        let b = run_stress_with_threads(&bcr14(), &cfg, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn grid_identity_cell_and_orientation() {
        let m = AppraisalModel::new(
            0.1,
            CashFlowStream::from_pairs(&[(0.0, 100.0)]).unwrap(),
            CashFlowStream::default(),
            CashFlowStream::from_pairs(&[(1.0, 60.0), (2.0, 60.0)]).unwrap(),
        )
        .unwrap();
        let g = sensitivity_grid(&m, &[1.0], &[1.0]).unwrap();
        assert_eq!(g.cell(0, 0).bcr, bcr(&m).unwrap());
        let g = sensitivity_grid(&m, &[0.85, 1.0, 1.15], &[1.0, 1.15]).unwrap();
        assert_eq!(g.cells.len(), 2);
        assert_eq!(g.cells[0].len(), 3);
        assert_eq!(g.cell(1, 0).cost_mult, 1.15);
        assert_eq!(g.cell(1, 0).benefit_mult, 0.85);
        assert!(sensitivity_grid(&m, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn contingency_examples() {
        let dist = Stressor::Distribution(dam_dist());
        let m = bcr14();
        let c = size_contingency(&m, &dist, 0.5).unwrap();
        assert_relative_eq!(c.contingency, 0.27, max_relative = 1e-12);
        let c = size_contingency(&m, &dist, 0.8).unwrap();
        assert_relative_eq!(c.contingency, 0.99, max_relative = 1e-12);
        assert_relative_eq!(c.adjusted_bcr, 1.4 / 1.99, max_relative = 1e-12);
        assert!(!c.proceed);
        let c = size_contingency(&m, &Stressor::Fixed(1.0), 0.9).unwrap();
        assert_eq!(c.contingency, 0.0);
        assert_eq!(c.adjusted_bcr, bcr(&m).unwrap());
        assert!(c.proceed);
        assert!(size_contingency(&m, &dist, 1.0).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v.iter().copied()), 2.0);
    }
}
