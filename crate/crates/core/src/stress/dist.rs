//! Quantile-anchored distributions with a generalized Pareto upper tail.
//!
//! The body runs through `(0, floor_x)` and each anchor `(p_i, x_i)`, with
//! `ln x` linear in `p` between consecutive knots. Above the last anchor the
//! conditional excess follows a GPD with shape `ξ < 1` and scale `σ`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Floor used when a specification does not give one.
pub const DEFAULT_FLOOR_X: f64 = 0.4;

/// Calibrated shapes must fall strictly inside this interval.
pub const CALIBRATION_SHAPE_RANGE: (f64, f64) = (0.0, 0.99);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub p: f64,
    pub x: f64,
}

impl Anchor {
    pub fn new(p: f64, x: f64) -> Self {
        Self { p, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdTail {
    pub shape: f64,
    pub scale: f64,
}

impl GpdTail {
    /// Quantile of the excess over the threshold at conditional survival `s`.
    fn excess_quantile(&self, s: f64) -> f64 {
        if self.shape == 0.0 {
            -self.scale * s.ln()
        } else {
            self.scale * (-self.shape * s.ln()).exp_m1() / self.shape
        }
    }

    /// Conditional survival of an excess `y >= 0`.
    fn excess_survival(&self, y: f64) -> f64 {
        if self.shape == 0.0 {
            return (-y / self.scale).exp();
        }
        let z = self.shape * y / self.scale;
        if z <= -1.0 {
            0.0
        } else {
            (-z.ln_1p() / self.shape).exp()
        }
    }

    fn excess_mean(&self) -> f64 {
        self.scale / (1.0 - self.shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSpec {
    Explicit(GpdTail),
    /// Choose the tail so that the distribution mean hits the target.
    CalibrateMean(f64),
}

/// A distribution as written in asset files, before calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileDistSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub anchors: Vec<Anchor>,
    #[serde(default = "default_floor")]
    pub floor_x: f64,
    pub tail: TailSpec,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR_X
}

impl QuantileDistSpec {
    pub fn build(&self) -> Result<QuantileDistribution> {
        build_quantile_dist(&self.anchors, self.floor_x, self.tail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDist", into = "RawDist")]
pub struct QuantileDistribution {
    /// `(0, floor_x)` followed by the anchors.
    knots: Vec<Anchor>,
    tail: GpdTail,
    mean_target: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDist {
    anchors: Vec<Anchor>,
    floor_x: f64,
    tail: GpdTail,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mean_target: Option<f64>,
}

impl TryFrom<RawDist> for QuantileDistribution {
    type Error = Error;

    fn try_from(raw: RawDist) -> Result<Self> {
        let mut dist = build_quantile_dist(&raw.anchors, raw.floor_x, TailSpec::Explicit(raw.tail))?;
        if let Some(target) = raw.mean_target {
            let mean = dist.mean();
            if !((mean - target).abs() <= 1e-6 * target.abs()) {
                return Err(Error::InvalidInput(format!(
                    "stated mean target {target} does not match the tail (mean {mean})"
                )));
            }
            dist.mean_target = Some(target);
        }
        Ok(dist)
    }
}

impl From<QuantileDistribution> for RawDist {
    fn from(d: QuantileDistribution) -> Self {
        RawDist {
            anchors: d.anchors().to_vec(),
            floor_x: d.floor_x(),
            tail: d.tail,
            mean_target: d.mean_target,
        }
    }
}

fn validate_anchors(anchors: &[Anchor], floor_x: f64) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::InvalidInput("at least one quantile anchor is required".into()));
    }
    if !(floor_x.is_finite() && floor_x > 0.0) {
        return Err(Error::InvalidInput(format!("floor {floor_x} must be positive and finite")));
    }
    let mut prev = Anchor::new(0.0, floor_x);
    for (i, a) in anchors.iter().enumerate() {
        if !(a.p > 0.0 && a.p < 1.0) {
            return Err(Error::InvalidInput(format!("anchor {i}: probability {} outside (0, 1)", a.p)));
        }
        if !a.x.is_finite() {
            return Err(Error::InvalidInput(format!("anchor {i}: value {} is not finite", a.x)));
        }
        if a.p <= prev.p || a.x <= prev.x {
            return Err(Error::InvalidInput(format!(
                "anchor {i} ({}, {}) must exceed the previous knot ({}, {}) in both coordinates",
                a.p, a.x, prev.p, prev.x
            )));
        }
        prev = *a;
    }
    Ok(())
}

/// Builds a distribution through the given anchors.
///
/// With [`TailSpec::CalibrateMean`] the tail scale is fixed so that the
/// density is continuous at the last anchor, and the shape is then the unique
/// value giving the requested mean (the mean is increasing in the shape).
pub fn build_quantile_dist(anchors: &[Anchor], floor_x: f64, tail: TailSpec) -> Result<QuantileDistribution> {
    validate_anchors(anchors, floor_x)?;
    let mut knots = Vec::with_capacity(anchors.len() + 1);
    knots.push(Anchor::new(0.0, floor_x));
    knots.extend_from_slice(anchors);

    match tail {
        TailSpec::Explicit(t) => {
            if !(t.shape.is_finite() && t.shape < 1.0) {
                return Err(Error::InvalidInput(format!("tail shape {} must be finite and < 1", t.shape)));
            }
            if !(t.scale.is_finite() && t.scale > 0.0) {
                return Err(Error::InvalidInput(format!("tail scale {} must be positive", t.scale)));
            }
            Ok(QuantileDistribution {
                knots,
                tail: t,
                mean_target: None,
            })
        }
        TailSpec::CalibrateMean(target) => {
            let n = knots.len();
            let (prev, last) = (knots[n - 2], knots[n - 1]);
            let tail_mass = 1.0 - last.p;
            let slope = last.x * (last.x / prev.x).ln() / (last.p - prev.p);
            let scale = tail_mass * slope;
            let body = body_mean(&knots);
            let excess = (target - body) / tail_mass - last.x;
            let (lo, hi) = CALIBRATION_SHAPE_RANGE;
            if !(target.is_finite() && excess > 0.0) {
                return Err(Error::CalibrationInfeasible(format!(
                    "mean target {target} is not above what the anchors already imply"
                )));
            }
            let shape = 1.0 - scale / excess;
            if shape <= lo {
                return Err(Error::CalibrationInfeasible(format!(
                    "mean target {target} needs a light tail (shape {shape:.4} <= {lo}); give an explicit tail"
                )));
            }
            if shape >= hi {
                return Err(Error::CalibrationInfeasible(format!(
                    "mean target {target} needs shape {shape:.4} >= {hi}, i.e. an (almost) infinite mean"
                )));
            }
            Ok(QuantileDistribution {
                knots,
                tail: GpdTail { shape, scale },
                mean_target: Some(target),
            })
        }
    }
}

/// `∫ Q(p) dp` over the body, using the logarithmic mean on each segment.
fn body_mean(knots: &[Anchor]) -> f64 {
    knots
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            (b.p - a.p) * (b.x - a.x) / (b.x / a.x).ln()
        })
        .sum()
}

impl QuantileDistribution {
    pub fn anchors(&self) -> &[Anchor] {
        &self.knots[1..]
    }

    pub fn floor_x(&self) -> f64 {
        self.knots[0].x
    }

    pub fn tail(&self) -> GpdTail {
        self.tail
    }

    pub fn mean_target(&self) -> Option<f64> {
        self.mean_target
    }

    fn last(&self) -> Anchor {
        *self.knots.last().expect("at least one anchor")
    }

    /// Inverse CDF on `(0, 1)`. Anchors are reproduced exactly.
    pub fn quantile(&self, u: f64) -> f64 {
        let last = self.last();
        if u >= last.p {
            if u == last.p {
                return last.x;
            }
            let s = (1.0 - u) / (1.0 - last.p);
            return last.x + self.tail.excess_quantile(s);
        }
        // First knot with p >= u; u > 0 so this is at least 1.
        let i = self.knots.partition_point(|k| k.p < u);
        let (a, b) = (self.knots[i - 1], self.knots[i]);
        if u == b.p {
            return b.x;
        }
        let w = (u - a.p) / (b.p - a.p);
        (a.x.ln() + w * (b.x / a.x).ln()).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.floor_x() {
            return 0.0;
        }
        let last = self.last();
        if x == last.x {
            return last.p;
        }
        if x > last.x {
            return 1.0 - (1.0 - last.p) * self.tail.excess_survival(x - last.x);
        }
        let i = self.knots.partition_point(|k| k.x < x);
        let (a, b) = (self.knots[i - 1], self.knots[i]);
        if x == b.x {
            return b.p;
        }
        a.p + (b.p - a.p) * (x / a.x).ln() / (b.x / a.x).ln()
    }

    /// Analytic mean; infinite when the tail shape is at least 1.
    pub fn mean(&self) -> f64 {
        let last = self.last();
        body_mean(&self.knots) + (1.0 - last.p) * (last.x + self.tail.excess_mean())
    }
}

/// Inverse-CDF sample for a uniform `u` in the open unit interval.
pub fn sample(dist: &QuantileDistribution, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("uniform variate {u} outside (0, 1)")));
    }
    Ok(dist.quantile(u))
}

/// Probability that a capex multiplier drawn from `dist` reaches `k_star`.
pub fn p_break_analytic(dist: &QuantileDistribution, k_star: f64) -> Result<f64> {
    if !(k_star > 0.0) {
        return Err(Error::Domain(format!("break-even overrun {k_star} must be positive")));
    }
    Ok(1.0 - dist.cdf(k_star))
}
