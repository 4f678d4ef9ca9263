//! Deterministic appraisal math.
//!
//! Cash flows are in constant base-year currency, times are in years from the
//! decision date, and discounting is discrete annual compounding
//! `(1 + r)^(-t)` with fractional `t` allowed.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower (open) and upper (closed) ends of the IRR search bracket.
pub const IRR_BRACKET: (f64, f64) = (-0.99, 10.0);

const IRR_SCAN_POINTS: usize = 4096;

/// Discount factor `(1 + r)^(-t)`.
pub fn discount_factor(r: f64, t: f64) -> Result<f64> {
    check_rate(r)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time {t} must be finite and >= 0")));
    }
    Ok(df(r, t))
}

#[inline]
fn df(r: f64, t: f64) -> f64 {
    (1.0 + r).powf(-t)
}

fn check_rate(r: f64) -> Result<()> {
    if r.is_finite() && r > -1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("discount rate {r} must be finite and > -1")))
    }
}

/// Sum of non-negative terms in descending order. Every present value total in
/// this module goes through here so that NPV, BCR and the payoff curve agree
/// on the sign of `gain - pain` exactly.
fn sum_desc(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| b.total_cmp(a));
    values.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CashFlow {
    /// Years after the decision date.
    pub t: f64,
    pub amount: f64,
}

impl CashFlow {
    pub fn new(t: f64, amount: f64) -> Self {
        Self { t, amount }
    }
}

/// A time-ordered list of cash flows.
///
/// An empty stream is allowed and stands for "no flows of this kind" (a model
/// without O&M costs, for instance).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CashFlow>", into = "Vec<CashFlow>")]
pub struct CashFlowStream {
    entries: Vec<CashFlow>,
}

impl CashFlowStream {
    /// Validates and sorts (stably, by time) the given entries.
    pub fn new(mut entries: Vec<CashFlow>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "cash flow {i}: time {} must be finite and >= 0",
                    e.t
                )));
            }
            if !e.amount.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "cash flow {i}: amount {} is not finite",
                    e.amount
                )));
            }
        }
        entries.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(Self { entries })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(t, a)| CashFlow::new(t, a)).collect())
    }

    pub fn entries(&self) -> &[CashFlow] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Plain time-ordered present value; `r` must be > -1.
    pub fn present_value(&self, r: f64) -> f64 {
        self.entries.iter().map(|e| e.amount * df(r, e.t)).sum()
    }

    fn discounted(&self, r: f64) -> Vec<f64> {
        self.entries.iter().map(|e| e.amount * df(r, e.t)).collect()
    }

    fn map(&self, f: impl Fn(&CashFlow) -> CashFlow) -> Self {
        // Shifting every time by the same amount keeps the order.
        Self {
            entries: self.entries.iter().map(f).collect(),
        }
    }

    fn has_mixed_signs(&self) -> bool {
        self.entries.iter().any(|e| e.amount > 0.0) && self.entries.iter().any(|e| e.amount < 0.0)
    }
}

impl TryFrom<Vec<CashFlow>> for CashFlowStream {
    type Error = Error;

    fn try_from(entries: Vec<CashFlow>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<CashFlowStream> for Vec<CashFlow> {
    fn from(s: CashFlowStream) -> Self {
        s.entries
    }
}

/// A project's dated real cash flows plus a real discount rate.
///
/// Capex and O&M are pain, benefits are gain; all amounts are non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct AppraisalModel {
    discount_rate: f64,
    base_year: Option<i32>,
    capex: CashFlowStream,
    om: CashFlowStream,
    benefits: CashFlowStream,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    discount_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_year: Option<i32>,
    capex: CashFlowStream,
    #[serde(default)]
    om: CashFlowStream,
    benefits: CashFlowStream,
}

impl TryFrom<RawModel> for AppraisalModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        Self::new(raw.discount_rate, raw.capex, raw.om, raw.benefits).map(|m| m.with_base_year(raw.base_year))
    }
}

impl From<AppraisalModel> for RawModel {
    fn from(m: AppraisalModel) -> Self {
        RawModel {
            discount_rate: m.discount_rate,
            base_year: m.base_year,
            capex: m.capex,
            om: m.om,
            benefits: m.benefits,
        }
    }
}

impl AppraisalModel {
    pub fn new(
        discount_rate: f64,
        capex: CashFlowStream,
        om: CashFlowStream,
        benefits: CashFlowStream,
    ) -> Result<Self> {
        check_rate(discount_rate)?;
        for (name, stream) in [("capex", &capex), ("om", &om), ("benefits", &benefits)] {
            if let Some(e) = stream.entries().iter().find(|e| e.amount < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} amounts must be >= 0 (found {} at t={})",
                    e.amount, e.t
                )));
            }
        }
        let model = Self {
            discount_rate,
            base_year: None,
            capex,
            om,
            benefits,
        };
        let pain = model.present_values().pain;
        if !(pain > 0.0 && pain.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "present value of capex plus O&M must be positive and finite (got {pain})"
            )));
        }
        Ok(model)
    }

    pub fn with_base_year(mut self, base_year: Option<i32>) -> Self {
        self.base_year = base_year;
        self
    }

    pub fn discount_rate(&self) -> f64 {
        self.discount_rate
    }

    pub fn base_year(&self) -> Option<i32> {
        self.base_year
    }

    pub fn capex(&self) -> &CashFlowStream {
        &self.capex
    }

    pub fn om(&self) -> &CashFlowStream {
        &self.om
    }

    pub fn benefits(&self) -> &CashFlowStream {
        &self.benefits
    }

    pub fn present_values(&self) -> PresentValues {
        let r = self.discount_rate;
        let mut pain: Vec<f64> = self.capex.discounted(r);
        pain.extend(self.om.discounted(r));
        PresentValues {
            rate: r,
            gain: sum_desc(&mut self.benefits.discounted(r)),
            capex: sum_desc(&mut self.capex.discounted(r)),
            om: sum_desc(&mut self.om.discounted(r)),
            pain: sum_desc(&mut pain),
        }
    }

    /// Benefits minus capex minus O&M, netted at identical times.
    pub fn net_stream(&self) -> CashFlowStream {
        let mut flows: Vec<CashFlow> = Vec::with_capacity(self.capex.len() + self.om.len() + self.benefits.len());
        flows.extend(self.benefits.entries().iter().copied());
        flows.extend(self.capex.entries().iter().map(|e| CashFlow::new(e.t, -e.amount)));
        flows.extend(self.om.entries().iter().map(|e| CashFlow::new(e.t, -e.amount)));
        flows.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut merged: Vec<CashFlow> = Vec::with_capacity(flows.len());
        for f in flows {
            match merged.last_mut() {
                Some(last) if last.t == f.t => last.amount += f.amount,
                _ => merged.push(f),
            }
        }
        CashFlowStream { entries: merged }
    }
}

/// Present values of the three streams of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresentValues {
    pub rate: f64,
    pub gain: f64,
    pub capex: f64,
    pub om: f64,
    /// Capex and O&M together.
    pub pain: f64,
}

impl PresentValues {
    /// Present values after [`apply_stress`] with the same multipliers, using
    /// the fact that a uniform shift by `d` years scales a present value by
    /// `(1 + r)^(-d)`.
    pub fn stressed(&self, cost_mult: f64, benefit_mult: f64, delay: f64) -> PresentValues {
        let f = df(self.rate, delay);
        let capex = self.capex * cost_mult;
        let om = self.om * f;
        PresentValues {
            rate: self.rate,
            gain: self.gain * benefit_mult * f,
            capex,
            om,
            pain: capex + om,
        }
    }

    pub fn npv(&self) -> f64 {
        self.gain - self.pain
    }

    pub fn bcr(&self) -> Result<f64> {
        ratio(self.gain, self.pain)
    }
}

fn ratio(gain: f64, pain: f64) -> Result<f64> {
    if pain > 0.0 {
        Ok(gain / pain)
    } else {
        Err(Error::UndefinedRatio(format!(
            "benefit-cost ratio needs positive discounted pain (got {pain})"
        )))
    }
}

/// Discounted benefits minus discounted capex and O&M.
pub fn npv(model: &AppraisalModel) -> f64 {
    model.present_values().npv()
}

/// Discounted gain over discounted pain. Below 1 the investment is broken.
pub fn bcr(model: &AppraisalModel) -> Result<f64> {
    model.present_values().bcr()
}

/// Smallest rate in `(-0.99, 10]` at which the stream's NPV is zero.
///
/// The bracket is scanned on a grid uniform in `ln(1 + r)` and the first sign
/// change is refined by bisection. Streams with several sign changes may have
/// several roots; only the smallest one is reported, and two roots closer than
/// one grid cell can be missed. Returns `None` when the stream is not mixed-sign
/// or NPV does not change sign on the bracket.
pub fn irr(stream: &CashFlowStream) -> Option<f64> {
    if !stream.has_mixed_signs() {
        return None;
    }
    let (lo, hi) = IRR_BRACKET;
    let (ln_lo, ln_hi) = ((1.0 + lo).ln(), (1.0 + hi).ln());
    let rate_at = |i: usize| {
        if i == IRR_SCAN_POINTS {
            hi
        } else {
            (ln_lo + (ln_hi - ln_lo) * i as f64 / IRR_SCAN_POINTS as f64).exp() - 1.0
        }
    };
    let npv_at = |r: f64| stream.present_value(r);

    let mut prev_r = lo;
    let mut prev = npv_at(lo);
    for i in 1..=IRR_SCAN_POINTS {
        let r = rate_at(i);
        let v = npv_at(r);
        if v == 0.0 {
            return Some(r);
        }
        if prev.is_finite() && v.is_finite() && (prev < 0.0) != (v < 0.0) && prev != 0.0 {
            return Some(bisect(npv_at, prev_r, r, prev));
        }
        prev_r = r;
        prev = v;
    }
    None
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let a_neg = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == a_neg {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Discounted gains and pains, each sorted in descending order, with their
/// running totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffCurve {
    pub gains_desc: Vec<f64>,
    pub pains_desc: Vec<f64>,
    pub cum_gain: Vec<f64>,
    pub cum_pain: Vec<f64>,
    /// First position at which cumulative pain exceeds total gain; present
    /// exactly when total pain exceeds total gain.
    pub fragility_index: Option<usize>,
}

impl PayoffCurve {
    pub fn total_gain(&self) -> f64 {
        self.cum_gain.last().copied().unwrap_or(0.0)
    }

    pub fn total_pain(&self) -> f64 {
        self.cum_pain.last().copied().unwrap_or(0.0)
    }
}

fn cumulative(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

pub fn payoff_curve(model: &AppraisalModel) -> PayoffCurve {
    let r = model.discount_rate;
    let mut gains = model.benefits.discounted(r);
    let mut pains = model.capex.discounted(r);
    pains.extend(model.om.discounted(r));
    gains.sort_by(|a, b| b.total_cmp(a));
    pains.sort_by(|a, b| b.total_cmp(a));
    let cum_gain = cumulative(&gains);
    let cum_pain = cumulative(&pains);
    let total_gain = cum_gain.last().copied().unwrap_or(0.0);
    let fragility_index = cum_pain.iter().position(|&p| p > total_gain);
    PayoffCurve {
        gains_desc: gains,
        pains_desc: pains,
        cum_gain,
        cum_pain,
        fragility_index,
    }
}

/// Capex multiplier at which the BCR reaches 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverrunThreshold {
    pub ratio: f64,
    /// Benefits net of shortfall do not even cover O&M.
    pub broken_regardless_of_capex: bool,
}

/// `(PV(benefits) * (1 - s) - PV(O&M)) / PV(capex)`, floored at zero.
pub fn break_even_overrun(model: &AppraisalModel, shortfall: f64) -> Result<OverrunThreshold> {
    if !(0.0..1.0).contains(&shortfall) {
        return Err(Error::Domain(format!("benefit shortfall {shortfall} outside [0, 1)")));
    }
    let pv = model.present_values();
    if pv.capex <= 0.0 {
        return Err(Error::Domain("break-even overrun needs positive discounted capex".into()));
    }
    let k = (pv.gain * (1.0 - shortfall) - pv.om) / pv.capex;
    Ok(if k < 0.0 {
        OverrunThreshold {
            ratio: 0.0,
            broken_regardless_of_capex: true,
        }
    } else {
        OverrunThreshold {
            ratio: k,
            broken_regardless_of_capex: false,
        }
    })
}

/// Scales capex by `cost_mult` and benefits by `benefit_mult`, and shifts
/// benefits and O&M (but not capex) `delay` years later.
pub fn apply_stress(model: &AppraisalModel, cost_mult: f64, benefit_mult: f64, delay: f64) -> Result<AppraisalModel> {
    for (name, v) in [("cost multiplier", cost_mult), ("benefit multiplier", benefit_mult), ("delay", delay)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Domain(format!("{name} {v} must be finite and >= 0")));
        }
    }
    let capex = model.capex.map(|e| CashFlow::new(e.t, e.amount * cost_mult));
    let benefits = model.benefits.map(|e| CashFlow::new(e.t + delay, e.amount * benefit_mult));
    let om = model.om.map(|e| CashFlow::new(e.t + delay, e.amount));
    AppraisalModel::new(model.discount_rate, capex, om, benefits).map(|m| m.with_base_year(model.base_year))
}

/// Outcome of the schedule-delay break-even search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "years", rename_all = "snake_case")]
pub enum DelayThreshold {
    /// BCR is already at or below 1 without any delay.
    AlreadyBroken,
    /// Delay in years at which the BCR falls to 1.
    Breaks(f64),
    /// With no positive time value, delay never breaks the investment.
    Never,
}

impl DelayThreshold {
    /// Break-even delay in years; `AlreadyBroken` maps to zero.
    pub fn years(&self) -> Option<f64> {
        match *self {
            DelayThreshold::AlreadyBroken => Some(0.0),
            DelayThreshold::Breaks(d) => Some(d),
            DelayThreshold::Never => None,
        }
    }
}

const DELAY_TOLERANCE: f64 = 1e-10;

/// Smallest delay at which the shifted benefits and O&M bring the BCR to 1.
pub fn break_even_delay(model: &AppraisalModel) -> Result<DelayThreshold> {
    let pv = model.present_values();
    if pv.bcr()? <= 1.0 {
        return Ok(DelayThreshold::AlreadyBroken);
    }
    if model.discount_rate <= 0.0 {
        return Ok(DelayThreshold::Never);
    }
    let bcr_at = |d: f64| {
        let s = pv.stressed(1.0, 1.0, d);
        s.gain / s.pain
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while bcr_at(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e9 {
            return Ok(DelayThreshold::Never);
        }
    }
    while hi - lo > DELAY_TOLERANCE * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bcr_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DelayThreshold::Breaks(0.5 * (lo + hi)))
}

/// Full deterministic appraisal of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppraisalResult {
    pub npv: f64,
    pub bcr: f64,
    /// IRR of the net stream; `None` when it has no root on the bracket.
    pub irr: Option<f64>,
    pub benefit_shortfall: f64,
    pub break_even_overrun: f64,
    pub broken_regardless_of_capex: bool,
    /// Absent when the model is already broken or delay can never break it.
    pub break_even_delay: Option<f64>,
    pub delay_threshold: DelayThreshold,
}

/// NPV, BCR, IRR and both break-even thresholds. `shortfall` only enters the
/// break-even overrun.
pub fn appraise(model: &AppraisalModel, shortfall: f64) -> Result<AppraisalResult> {
    let pv = model.present_values();
    let overrun = break_even_overrun(model, shortfall)?;
    let delay = break_even_delay(model)?;
    Ok(AppraisalResult {
        npv: pv.npv(),
        bcr: pv.bcr()?,
        irr: irr(&model.net_stream()),
        benefit_shortfall: shortfall,
        break_even_overrun: overrun.ratio,
        broken_regardless_of_capex: overrun.broken_regardless_of_capex,
        break_even_delay: match delay {
            DelayThreshold::Breaks(d) => Some(d),
            _ => None,
        },
        delay_threshold: delay,
    })
}
