//! Streaming moment accumulators, least squares and bootstrap helpers.

use crate::rng::ReplicaRng;

/// Welford mean/M2 accumulator with an associative merge, so ensemble
/// statistics can be reduced across workers in any order.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n - 1) as f64
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Mean/variance of a complex-valued Monte Carlo estimate, tracked per
/// component. The combined standard error is
/// `sqrt((Var Re + Var Im) / n)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexMeanVar {
    pub re: MeanVar,
    pub im: MeanVar,
}

impl ComplexMeanVar {
    pub fn push(&mut self, re: f64, im: f64) {
        self.re.push(re);
        self.im.push(im);
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            re: self.re.merge(other.re),
            im: self.im.merge(other.im),
        }
    }

    pub fn mean(&self) -> (f64, f64) {
        (self.re.mean, self.im.mean)
    }

    pub fn stderr(&self) -> f64 {
        let n = self.re.n.max(1) as f64;
        ((self.re.variance() + self.im.variance()) / n).sqrt()
    }
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points to fit a line");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LineFit { slope, intercept, r2 }
}

/// Percentile bootstrap confidence interval for a statistic of per-replica
/// rows. `stat` maps a resampled index set to the statistic value.
pub fn bootstrap_ci(
    n_rows: usize,
    resamples: usize,
    seed: u64,
    mut stat: impl FnMut(&[usize]) -> f64,
    level: f64,
) -> (f64, f64) {
    let mut rng = ReplicaRng::new(seed, u64::MAX);
    let mut values = Vec::with_capacity(resamples);
    let mut idx = vec![0usize; n_rows];
    for _ in 0..resamples {
        for slot in idx.iter_mut() {
            *slot = (rng.next_u64() % n_rows as u64) as usize;
        }
        values.push(stat(&idx));
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let alpha = 0.5 * (1.0 - level);
    let lo = values[((values.len() as f64 * alpha) as usize).min(values.len() - 1)];
    let hi = values[((values.len() as f64 * (1.0 - alpha)) as usize).min(values.len() - 1)];
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut whole = MeanVar::default();
        for &x in &xs {
            whole.push(x);
        }
        let mut a = MeanVar::default();
        let mut b = MeanVar::default();
        for &x in &xs[..37] {
            a.push(x);
        }
        for &x in &xs[37..] {
            b.push(x);
        }
        let merged = a.merge(b);
        assert_relative_eq!(merged.mean, whole.mean, max_relative = 1e-12);
        assert_relative_eq!(merged.variance(), whole.variance(), max_relative = 1e-12);
    }

    #[test]
    fn fit_recovers_exact_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let fit = linear_fit(&x, &y);
        assert_relative_eq!(fit.slope, -2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bootstrap_brackets_the_mean() {
        let data: Vec<f64> = (0..200).map(|i| ((i * 37) % 100) as f64 / 100.0).collect();
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        let (lo, hi) = bootstrap_ci(
            data.len(),
            400,
            99,
            |idx| idx.iter().map(|&i| data[i]).sum::<f64>() / idx.len() as f64,
            0.95,
        );
        assert!(lo <= mean && mean <= hi);
        assert!(hi - lo < 0.2);
    }
}
