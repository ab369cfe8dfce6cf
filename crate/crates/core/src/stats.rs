//! Small descriptive statistics and least-squares fits for scaling studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Percentile bootstrap interval for the median.
pub fn bootstrap_median_ci(xs: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; xs.len()];
    let mut meds: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            median(&buf)
        })
        .collect();
    meds.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| meds[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub rss: f64,
    pub n: usize,
}

impl Fit {
    /// Gaussian-likelihood AIC with two parameters.
    pub fn aic(&self) -> f64 {
        let n = self.n as f64;
        // Guard against an exact fit.
        n * (self.rss / n).max(1e-300).ln() + 2.0 * 2.0
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Fit {
    assert_eq!(x.len(), y.len(), "fit needs paired samples");
    assert!(x.len() >= 2, "fit needs at least two points");
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let tss: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Fit {
        intercept,
        slope,
        r_squared,
        rss,
        n: x.len(),
    }
}

/// Fits `y = a + b ln x`.
pub fn log_fit(x: &[f64], y: &[f64]) -> Fit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Logarithmic,
    Linear,
}

/// Both fits and the one with lower AIC.
#[derive(Debug, Clone, Copy)]
pub struct GrowthComparison {
    pub log: Fit,
    pub linear: Fit,
    pub preferred: Growth,
}

impl GrowthComparison {
    pub fn preferred_fit(&self) -> &Fit {
        match self.preferred {
            Growth::Logarithmic => &self.log,
            Growth::Linear => &self.linear,
        }
    }
}

pub fn compare_growth(x: &[f64], y: &[f64]) -> GrowthComparison {
    let log = log_fit(x, y);
    let linear = linear_fit(x, y);
    let preferred = if log.aic() < linear.aic() {
        Growth::Logarithmic
    } else {
        Growth::Linear
    };
    GrowthComparison {
        log,
        linear,
        preferred,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn population_std() {
        assert!((std_dev(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn picks_the_generating_model() {
        let x: Vec<f64> = (6..=12).map(|k| (1u64 << k) as f64).collect();
        let wiggle = [0.3, -0.2, 0.1, -0.3, 0.2, -0.1, 0.05];
        let ylog: Vec<f64> = x
            .iter()
            .zip(wiggle)
            .map(|(v, w)| 5.0 + 3.0 * v.ln() + w)
            .collect();
        assert_eq!(compare_growth(&x, &ylog).preferred, Growth::Logarithmic);
        let ylin: Vec<f64> = x
            .iter()
            .zip(wiggle)
            .map(|(v, w)| 2.0 + 0.5 * v + w)
            .collect();
        assert_eq!(compare_growth(&x, &ylin).preferred, Growth::Linear);
    }

    #[test]
    fn bootstrap_brackets_median() {
        let xs: Vec<f64> = (0..101).map(f64::from).collect();
        let (lo, hi) = bootstrap_median_ci(&xs, 500, 0.95, 1);
        assert!(lo <= 50.0 && 50.0 <= hi && lo < hi);
    }
}
