use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::{TestMethod, TestResult};
use crate::{Error, Result};

fn f_upper_tail(f: f64, df1: usize, df2: usize) -> Result<f64> {
    if f.is_infinite() {
        return Ok(0.0);
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    let dist = FisherSnedecor::new(df1 as f64, df2 as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(dist.sf(f).clamp(0.0, 1.0))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Classical one-way ANOVA, `F = MS_between / MS_within` on
/// `(k - 1, N - k)` degrees of freedom.
pub fn one_way_f<G: AsRef<[f64]>>(groups: &[G]) -> Result<TestResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!("one-way F needs at least two groups (got {k})")));
    }
    if groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(Error::InvalidInput("every group needs at least one observation".into()));
    }
    if let Some(v) = groups.iter().flat_map(|g| g.as_ref()).find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite observation {v}")));
    }
    let total: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if total <= k {
        return Err(Error::InvalidInput(format!(
            "one-way F needs more observations ({total}) than groups ({k})"
        )));
    }
    let means: Vec<f64> = groups.iter().map(|g| mean(g.as_ref())).collect();
    let grand = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| m * g.as_ref().len() as f64)
        .sum::<f64>()
        / total as f64;
    let ss_between: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().len() as f64 * (m - grand).powi(2))
        .sum();
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.as_ref().iter().map(|x| (x - m).powi(2)).sum::<f64>())
        .sum();
    if ss_within <= 0.0 {
        return Err(Error::DegenerateVariance(
            "all groups have zero within-group variance".into(),
        ));
    }
    let (df1, df2) = (k - 1, total - k);
    let f = (ss_between / df1 as f64) / (ss_within / df2 as f64);
    Ok(TestResult {
        statistic: f,
        p_value: f_upper_tail(f, df1, df2)?,
        method: TestMethod::Exact,
        n: df1,
        m: df2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    #[serde(flatten)]
    pub test: TestResult,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// OLS regression of `y` on `x` and the F test (`t^2` on `(1, n - 2)` degrees
/// of freedom) of a zero slope.
pub fn trend_f(x: &[f64], y: &[f64]) -> Result<TrendResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidInput(format!("x has {n} values but y has {}", y.len())));
    }
    if n < 3 {
        return Err(Error::InvalidInput(format!("trend test needs at least 3 points (got {n})")));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite observation {v}")));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::Domain("all x values are equal; the slope is undefined".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    if y.iter().all(|&v| v == y[0]) {
        return Ok(TrendResult {
            test: TestResult {
                statistic: 0.0,
                p_value: 1.0,
                method: TestMethod::Exact,
                n: 1,
                m: n - 2,
            },
            slope: 0.0,
            intercept: y[0],
            r_squared: 0.0,
        });
    }
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let ssr = slope * sxy;
    let df2 = n - 2;
    let f = if sse > 0.0 {
        ssr / (sse / df2 as f64)
    } else if ssr > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(TrendResult {
        test: TestResult {
            statistic: f,
            p_value: f_upper_tail(f, 1, df2)?,
            method: TestMethod::Exact,
            n: 1,
            m: df2,
        },
        slope,
        intercept,
        r_squared: if syy > 0.0 { (ssr / syy).min(1.0) } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_groups_give_zero() {
        let r = one_way_f(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn hand_anova_table() {
        // Group means 2 and 3, grand mean 2.5: SSB = 3(0.25) + 3(0.25) = 1.5,
        // SSW = 2 + 2 = 4 on 4 df, so F = 1.5 / 1 = 1.5.
        let r = one_way_f(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]]).unwrap();
        assert_relative_eq!(r.statistic, 1.5, max_relative = 1e-14);
        assert_eq!((r.n, r.m), (1, 4));
        // F(1, 4) upper tail at 1.5 equals the two-sided t(4) tail at sqrt(1.5):
        // 0.28786413...
        assert_relative_eq!(r.p_value, 0.2878641347, max_relative = 1e-8);
    }

    #[test]
    fn degenerate_within_variance() {
        assert!(matches!(
            one_way_f(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
            Err(Error::DegenerateVariance(_))
        ));
        assert!(one_way_f(&[vec![1.0]]).is_err());
        assert!(one_way_f(&[vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn perfect_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let r = trend_f(&x, &y).unwrap();
        assert_relative_eq!(r.slope, 2.0, max_relative = 1e-14);
        assert_relative_eq!(r.r_squared, 1.0, max_relative = 1e-14);
        assert!(r.test.p_value < 1e-12);
    }

    #[test]
    fn constant_response() {
        let r = trend_f(&[1.0, 2.0, 3.0], &[0.1, 0.1, 0.1]).unwrap();
        assert_eq!((r.slope, r.test.statistic, r.test.p_value), (0.0, 0.0, 1.0));
        assert!(matches!(trend_f(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Err(Error::Domain(_))));
        assert!(trend_f(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }
}
