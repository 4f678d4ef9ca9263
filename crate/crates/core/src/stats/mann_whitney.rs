use statrs::function::erf::erfc;

use super::{TestMethod, TestResult};
use crate::{Error, Result};

/// Samples with at most this many pooled observations get an exact p-value by
/// enumerating every assignment of ranks to the first sample.
pub const EXACT_MAX_TOTAL: usize = 12;

/// Two-sample Mann-Whitney U test.
///
/// `U = #{(i, j): x_i > y_j} + #{ties} / 2`, with a two-sided p-value. Small
/// samples are enumerated exactly (ties kept as midranks); larger ones use the
/// normal approximation with tie-corrected variance and a continuity
/// correction of 1/2.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<TestResult> {
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("Mann-Whitney U needs two non-empty samples".into()));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample value {v}")));
    }

    let pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    let (ranks2, tie_sizes) = doubled_midranks(&pooled);
    let total = n + m;
    let rank_sum2: i64 = ranks2.iter().zip(&pooled).filter(|(_, p)| p.1).map(|(r, _)| *r).sum();
    // 2U = 2R - n(n+1)
    let u2 = rank_sum2 - (n * (n + 1)) as i64;
    let u = u2 as f64 / 2.0;
    let nm = (n * m) as i64;

    if total <= EXACT_MAX_TOTAL {
        let observed = (u2 - nm).abs();
        let mut extreme = 0u64;
        let mut count = 0u64;
        for_each_subset_sum(&ranks2, n, &mut |sum2| {
            count += 1;
            if (sum2 - (n * (n + 1)) as i64 - nm).abs() >= observed {
                extreme += 1;
            }
        });
        return Ok(TestResult {
            statistic: u,
            p_value: extreme as f64 / count as f64,
            method: TestMethod::Exact,
            n,
            m,
        });
    }

    let (nf, mf, big_n) = (n as f64, m as f64, total as f64);
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (big_n * (big_n - 1.0));
    let var = nf * mf / 12.0 * ((big_n + 1.0) - tie_term);
    let p_value = if var > 0.0 {
        let z = ((u - nf * mf / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    } else {
        1.0
    };
    Ok(TestResult {
        statistic: u,
        p_value,
        method: TestMethod::NormalApprox,
        n,
        m,
    })
}

/// Twice the midrank of every pooled observation (so ranks stay integral),
/// in input order, plus the sizes of all tie groups.
fn doubled_midranks(pooled: &[(f64, bool)]) -> (Vec<i64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].0.total_cmp(&pooled[b].0));
    let mut ranks2 = vec![0i64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]].0 == pooled[order[i]].0 {
            j += 1;
        }
        // Positions i..j hold ranks i+1..=j; twice their mean is i + j + 1.
        let r2 = (i + j + 1) as i64;
        for &k in &order[i..j] {
            ranks2[k] = r2;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks2, ties)
}

/// Calls `f` with the sum of every `k`-element subset of `values`.
fn for_each_subset_sum(values: &[i64], k: usize, f: &mut impl FnMut(i64)) {
    fn go(values: &[i64], start: usize, left: usize, acc: i64, f: &mut impl FnMut(i64)) {
        if left == 0 {
            f(acc);
            return;
        }
        for i in start..=values.len() - left {
            go(values, i + 1, left - 1, acc + values[i], f);
        }
    }
    go(values, 0, k, 0, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_by_two_exact() {
        let r = mann_whitney_u(&[3.0, 4.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 4.0);
        assert_eq!(r.method, TestMethod::Exact);
        assert_relative_eq!(r.p_value, 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn full_ties_give_half_nm() {
        let x = [1.0, 2.0, 2.0, 5.0];
        let r = mann_whitney_u(&x, &x).unwrap();
        assert_eq!(r.statistic, 8.0);
        assert_eq!(r.p_value, 1.0);
        let big: Vec<f64> = (0..20).map(|i| (i % 7) as f64).collect();
        let r = mann_whitney_u(&big, &big).unwrap();
        assert_eq!(r.statistic, 200.0);
        assert_eq!(r.method, TestMethod::NormalApprox);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn u_counts_pairs() {
        let x = [1.0, 3.0, 3.0, 7.0];
        let y = [3.0, 0.5, 9.0];
        let mut brute = 0.0;
        for a in x {
            for b in y {
                brute += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
        assert_eq!(mann_whitney_u(&x, &y).unwrap().statistic, brute);
        let swapped = mann_whitney_u(&y, &x).unwrap().statistic;
        assert_eq!(brute + swapped, 12.0);
    }

    #[test]
    fn all_constant_normal_approx() {
        let x = vec![2.0; 10];
        let y = vec![2.0; 10];
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }
}
