//! Replication summaries with Student-t confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl Estimate {
    /// A value known exactly (zero-width interval).
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            ci_low: value,
            ci_high: value,
            n: 1,
        }
    }

    /// Mean and two-sided `level` interval of the sample.
    pub fn from_samples(samples: &[f64], level: f64) -> Self {
        let n = samples.len();
        assert!(n > 0, "empty sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate::exact(mean);
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("degrees of freedom positive")
            .inverse_cdf(0.5 + level / 2.0);
        let half = t * (var / n as f64).sqrt();
        Estimate {
            mean,
            ci_low: mean - half,
            ci_high: mean + half,
            n,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_matches_t_table() {
        // t_{0.975, 4} = 2.776
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.95);
        assert_eq!(e.mean, 3.0);
        let se = (2.5f64 / 5.0).sqrt();
        assert!((e.half_width() - 2.7764 * se).abs() < 1e-3);
    }

    #[test]
    fn slope_of_line() {
        assert!((slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-12);
    }
}
