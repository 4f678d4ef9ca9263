use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::quantile::quantile_sorted;
use crate::{Error, Result};

pub const KDE_GRID_POINTS: usize = 512;
/// The grid extends this many bandwidths beyond the sample range on each side.
pub const KDE_SPAN_BANDWIDTHS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTrace {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityTrace {
    /// Trapezoid-rule integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }

    /// Two-column `value,density` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["value", "density"])?;
        for (g, d) in self.grid.iter().zip(&self.density) {
            w.write_record([g.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`.
///
/// Falls back to the standard deviation alone when the IQR is zero.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::BandwidthRequired(format!(
            "Silverman's rule needs at least two observations (got {n}); pass a bandwidth"
        )));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::BandwidthRequired(
            "sample has zero variance; pass an explicit bandwidth".into(),
        ));
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Gaussian kernel density on a uniform 512-point grid spanning
/// `[min - 4h, max + 4h]`.
pub fn kde(sample: &[f64], bandwidth: Option<f64>) -> Result<DensityTrace> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("density trace of an empty sample".into()));
    }
    if let Some(x) = sample.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample value {x}")));
    }
    let h = match bandwidth {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => return Err(Error::Domain(format!("bandwidth {h} must be positive and finite"))),
        None => silverman_bandwidth(sample)?,
    };
    let min = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = min - KDE_SPAN_BANDWIDTHS * h;
    let hi = max + KDE_SPAN_BANDWIDTHS * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (sample.len() as f64 * h * (2.0 * PI).sqrt());

    let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let density = grid
        .iter()
        .map(|&g| {
            sample
                .iter()
                .map(|&x| {
                    let z = (g - x) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(DensityTrace {
        grid,
        density,
        bandwidth: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_point_peak() {
        let t = kde(&[1.27], Some(0.1)).unwrap();
        let (i, peak) = t
            .density
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        // The grid is symmetric about the point, so the peak sits next to it.
        assert!((t.grid[i] - 1.27).abs() <= (t.grid[1] - t.grid[0]));
        assert_relative_eq!(peak, 1.0 / (0.1 * (2.0 * PI).sqrt()), max_relative = 1e-3);
    }

    #[test]
    fn symmetric_pair() {
        let t = kde(&[1.2, 1.8], Some(0.15)).unwrap();
        let n = t.grid.len();
        for i in 0..n {
            assert!((t.grid[i] - 1.5 + (t.grid[n - 1 - i] - 1.5)).abs() < 1e-9);
            assert!((t.density[i] - t.density[n - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn integrates_to_one() {
        let t = kde(&[0.8, 1.0, 1.27, 1.4, 2.1, 3.5], None).unwrap();
        assert!((t.integral() - 1.0).abs() < 0.01);
        assert!(t.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn zero_variance_needs_bandwidth() {
        assert!(matches!(kde(&[1.0, 1.0, 1.0], None), Err(Error::BandwidthRequired(_))));
        assert!(matches!(kde(&[1.0], None), Err(Error::BandwidthRequired(_))));
        assert!(kde(&[1.0, 1.0], Some(0.2)).is_ok());
        assert!(kde(&[], Some(0.2)).is_err());
    }

    #[test]
    fn silverman_matches_hand_value() {
        // sd = sqrt(2.5), IQR(type 7) of 1..5 = 2, n^(-1/5) = 5^(-0.2)
        let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let expected = 0.9 * (2.5f64.sqrt()).min(2.0 / 1.34) * 5f64.powf(-0.2);
        assert_relative_eq!(h, expected, max_relative = 1e-15);
    }

    #[test]
    fn csv_export() {
        let t = kde(&[1.0], Some(0.5)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("value,density\n"));
        assert_eq!(text.lines().count(), KDE_GRID_POINTS + 1);
    }
}
