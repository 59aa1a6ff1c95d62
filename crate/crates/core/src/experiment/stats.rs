//! Small summary statistics used by the campaign reports.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A binomial proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub frequency: f64,
    /// `sqrt(p (1 - p) / N)` at the observed frequency.
    pub std_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        let (low, high) = wilson_interval(successes, trials, Z95);
        let p = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        let se = if trials == 0 { 0.0 } else { (p * (1.0 - p) / trials as f64).sqrt() };
        Proportion {
            successes,
            trials,
            frequency: p,
            std_error: se,
            wilson_low: low,
            wilson_high: high,
        }
    }

    /// Standard error under a hypothesised success probability `p0`.
    pub fn sigma_at(&self, p0: f64) -> f64 {
        (p0 * (1.0 - p0) / self.trials as f64).sqrt()
    }

    /// `|frequency - p0| <= k * sigma(p0)`.
    pub fn within_sigmas(&self, p0: f64, k: f64) -> bool {
        (self.frequency - p0).abs() <= k * self.sigma_at(p0)
    }
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nf = trials as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return MeanEstimate {
                count,
                mean: f64::NAN,
                std_dev: f64::NAN,
                std_error: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / count as f64;
        let var = if count > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        let std_dev = var.sqrt();
        MeanEstimate {
            count,
            mean,
            std_dev,
            std_error: std_dev / (count as f64).sqrt(),
        }
    }

    /// `|mean - target| <= k * std_error`, with a tiny floor so that an
    /// exactly deterministic quantity compares equal to its target.
    pub fn matches(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + 1e-12
    }

    /// `mean >= bound - k * std_error`.
    pub fn at_least(&self, bound: f64, k: f64) -> bool {
        self.mean >= bound - k * self.std_error - 1e-12
    }

    /// `mean <= bound + k * std_error`.
    pub fn at_most(&self, bound: f64, k: f64) -> bool {
        self.mean <= bound + k * self.std_error + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quantiles {
    pub fn from_samples(xs: &[f64]) -> Self {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        Quantiles {
            min: s.first().copied().unwrap_or(f64::NAN),
            median: quantile_sorted(&s, 0.5),
            p90: quantile_sorted(&s, 0.9),
            max: s.last().copied().unwrap_or(f64::NAN),
            mean: if s.is_empty() { f64::NAN } else { s.iter().sum::<f64>() / s.len() as f64 },
        }
    }
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub max_residual: f64,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = my - slope * mx;
        let max_residual = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| y - (intercept + slope * x))
            .fold(f64::NEG_INFINITY, f64::max);
        LinearFit {
            intercept,
            slope,
            max_residual,
        }
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wilson_reference_values() {
        // 50/100 at z = 1.96: centre 0.5, half-width 0.0962
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert_abs_diff_eq!(lo, 0.403_831, epsilon = 1e-5);
        assert_abs_diff_eq!(hi, 0.596_169, epsilon = 1e-5);
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert_abs_diff_eq!(hi, 0.277_54, epsilon = 1e-4);
        let p = Proportion::new(100, 100);
        assert_eq!(p.frequency, 1.0);
        assert!(p.wilson_low < 1.0);
    }

    #[test]
    fn mean_and_fit() {
        let m = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(m.mean, 2.5);
        assert_abs_diff_eq!(m.std_dev, (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        let f = LinearFit::fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 1.0, epsilon = 1e-12);
        assert!(f.max_residual.abs() < 1e-12);
        let q = Quantiles::from_samples(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(q.median, 2.5);
        assert_eq!(q.max, 4.0);
    }
}
