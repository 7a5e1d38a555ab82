use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RandomStream;

/// Streaming mean and centered second moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combine two disjoint partial summaries.
    pub fn merge(&self, other: &Welford) -> Welford {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Welford {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (divisor `count − 1`).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / (self.count - 1) as f64).max(0.0)
    }
}

/// Samples per partial summary; the merge tree depends only on this and on
/// the sample count, never on the thread count.
pub const CHUNK: usize = 1024;

pub fn chunked_summary(xs: &[f64]) -> Welford {
    xs.chunks(CHUNK)
        .map(|c| {
            let mut w = Welford::new();
            c.iter().for_each(|&x| w.push(x));
            w
        })
        .fold(Welford::new(), |acc, w| acc.merge(&w))
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapInterval {
    pub low: f64,
    pub high: f64,
    /// Standard deviation of the resampled variances.
    pub std_error: f64,
}

/// Percentile 95% interval of the sample variance over `resamples` seeded
/// resamples with replacement.
pub fn bootstrap_variance(xs: &[f64], resamples: usize, seed: u64) -> BootstrapInterval {
    let n = xs.len();
    if n < 2 || resamples == 0 {
        return BootstrapInterval { low: 0.0, high: 0.0, std_error: 0.0 };
    }
    let mut stats: Vec<f64> = (0..resamples as u64)
        .map(|r| {
            let mut stream = RandomStream::bootstrap(seed, r);
            let mut w = Welford::new();
            for _ in 0..n {
                w.push(xs[stream.below(n)]);
            }
            w.variance()
        })
        .collect();
    let mut spread = Welford::new();
    stats.iter().for_each(|&v| spread.push(v));
    stats.sort_by(f64::total_cmp);
    let pick = |q: f64| stats[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    BootstrapInterval { low: pick(0.025), high: pick(0.975), std_error: spread.variance().sqrt() }
}

/// `ŷ = amplitude · base^x` fitted on `(x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub amplitude: f64,
    pub base: f64,
    pub r2: f64,
}

impl ExponentialFit {
    pub fn ln_slope(&self) -> f64 {
        self.base.ln()
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.amplitude * self.base.powf(x)
    }
}

/// Ordinary least squares `y = intercept + slope·x`, with R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!("{} x values, {} y values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok((intercept, slope, r2))
}

pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<ExponentialFit> {
    if xs.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: xs.len() });
    }
    if let Some(y) = ys.iter().find(|&&y| y.is_nan() || y <= 0.0) {
        return Err(Error::Fit(format!("non-positive value {y}")));
    }
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (intercept, slope, r2) = linear_fit(xs, &logs)?;
    Ok(ExponentialFit { amplitude: intercept.exp(), base: slope.exp(), r2 })
}

/// `y = slope · x` with the coefficient of determination taken about the
/// mean of `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginFit {
    pub slope: f64,
    pub r2: f64,
}

pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Result<OriginFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!("{} x values, {} y values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: xs.len() });
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("x values are all zero".into()));
    }
    let slope = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(OriginFit { slope, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_variance() {
        let mut w = Welford::new();
        w.push(1.0);
        w.push(4.0);
        assert_eq!(w.mean(), 2.5);
        assert_eq!(w.variance(), 4.5);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..5000).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let mut seq = Welford::new();
        xs.iter().for_each(|&x| seq.push(x));
        let chunked = chunked_summary(&xs);
        assert_eq!(chunked.count(), seq.count());
        assert!((chunked.mean() - seq.mean()).abs() < 1e-14);
        assert!((chunked.variance() - seq.variance()).abs() < 1e-13);
        let naive_mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let naive_var =
            xs.iter().map(|x| (x - naive_mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((chunked.variance() - naive_var).abs() < 1e-13);
    }

    #[test]
    fn empty_merges() {
        let mut a = Welford::new();
        a.push(3.0);
        assert_eq!(a.merge(&Welford::new()), a);
        assert_eq!(Welford::new().merge(&a), a);
        assert_eq!(a.variance(), 0.0);
    }

    #[test]
    fn bootstrap_brackets_and_reproduces() {
        let xs: Vec<f64> = (0..2000).map(|i| ((i as f64) * 0.7).sin()).collect();
        let b1 = bootstrap_variance(&xs, 200, 5);
        let b2 = bootstrap_variance(&xs, 200, 5);
        assert_eq!(b1, b2);
        let v = chunked_summary(&xs).variance();
        assert!(b1.low <= v && v <= b1.high);
        assert!(b1.std_error > 0.0);
        let zeros = vec![0.0; 100];
        let b0 = bootstrap_variance(&zeros, 200, 1);
        assert_eq!((b0.low, b0.high, b0.std_error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exact_exponential() {
        let xs: Vec<f64> = (1..=6).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.25 * (5.0f64 / 12.0).powf(x - 1.0)).collect();
        let fit = fit_exponential(&xs, &ys).unwrap();
        assert!((fit.base - 5.0 / 12.0).abs() < 1e-12);
        assert!((fit.amplitude - 0.25 * 12.0 / 5.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_exponential() {
        let fit = fit_exponential(&[1.0, 2.0, 3.0], &[0.3, 0.3, 0.3]).unwrap();
        assert!((fit.base - 1.0).abs() < 1e-15);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_exponential(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
        assert!(fit_exponential(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_through_origin(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn origin_fit() {
        let fit = fit_through_origin(&[0.0, 1.0, 2.0, 3.0], &[0.0, 2.0, 4.0, 6.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-15);
        assert!((fit.r2 - 1.0).abs() < 1e-15);
        let fit = fit_through_origin(&[1.0, 2.0, 3.0], &[3.0, 3.0, 3.5]).unwrap();
        assert!(fit.r2 < 0.5);
    }
}
