//! Output analysis: time averages, sample means, batch-means intervals and
//! the growth test used to flag unstable runs.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub const NUM_BATCHES: usize = 20;
pub const NUM_CHECKPOINTS: usize = 50;

/// Two-sided 95% Student-t quantile with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    assert!(df >= 1, "t quantile needs df >= 1");
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("valid t parameters")
        .inverse_cdf(0.975)
}

/// Mean, sample standard deviation and 95% t half-width of `xs`.
pub fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    (mean, sd, t_quantile_975(n - 1) * sd / (n as f64).sqrt())
}

/// Equal-width batches over a measurement window.
#[derive(Debug, Clone, Copy)]
struct Grid {
    start: f64,
    width: f64,
}

impl Grid {
    fn new(start: f64, end: f64) -> Self {
        Grid {
            start,
            width: ((end - start) / NUM_BATCHES as f64).max(f64::MIN_POSITIVE),
        }
    }

    fn index(&self, t: f64) -> usize {
        (((t - self.start) / self.width) as usize).min(NUM_BATCHES - 1)
    }

    fn end_of(&self, idx: usize) -> f64 {
        self.start + (idx + 1) as f64 * self.width
    }
}

/// Time integral of a piecewise constant level, split into batches.
#[derive(Debug, Clone)]
pub struct LevelTracker {
    level: f64,
    last_t: f64,
    grid: Grid,
    horizon: f64,
    area: [f64; NUM_BATCHES],
}

impl LevelTracker {
    pub fn new(start: f64, horizon: f64) -> Self {
        LevelTracker {
            level: 0.0,
            last_t: start,
            grid: Grid::new(start, horizon),
            horizon,
            area: [0.0; NUM_BATCHES],
        }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn advance(&mut self, t: f64) {
        let t = t.min(self.horizon);
        while self.last_t < t {
            let mut idx = self.grid.index(self.last_t);
            while idx < NUM_BATCHES - 1 && self.grid.end_of(idx) <= self.last_t {
                idx += 1;
            }
            let end = if idx == NUM_BATCHES - 1 {
                t
            } else {
                self.grid.end_of(idx).min(t)
            };
            self.area[idx] += self.level * (end - self.last_t);
            self.last_t = end;
        }
    }

    pub fn set(&mut self, t: f64, level: f64) {
        self.advance(t);
        self.level = level;
    }

    pub fn add(&mut self, t: f64, delta: f64) {
        let level = self.level + delta;
        self.set(t, level);
    }

    /// Discards everything integrated so far and restarts the window at `t`.
    pub fn restart(&mut self, t: f64) {
        self.last_t = t;
        self.grid = Grid::new(t, self.horizon);
        self.area = [0.0; NUM_BATCHES];
    }

    /// Time average over the window and its batch-means half-width.
    pub fn summary(&mut self) -> (f64, f64) {
        self.advance(self.horizon);
        let span = self.grid.width * NUM_BATCHES as f64;
        if !(span > 0.0) {
            return (f64::NAN, f64::NAN);
        }
        let mean = self.area.iter().sum::<f64>() / span;
        let batches: Vec<f64> = self.area.iter().map(|a| a / self.grid.width).collect();
        (mean, mean_ci(&batches).2)
    }
}

/// Per-customer observations (sojourn times), batched by completion time.
#[derive(Debug, Clone)]
pub struct SampleTracker {
    grid: Grid,
    horizon: f64,
    sum: [f64; NUM_BATCHES],
    count: [u64; NUM_BATCHES],
}

impl SampleTracker {
    pub fn new(start: f64, horizon: f64) -> Self {
        SampleTracker {
            grid: Grid::new(start, horizon),
            horizon,
            sum: [0.0; NUM_BATCHES],
            count: [0; NUM_BATCHES],
        }
    }

    pub fn record(&mut self, t: f64, x: f64) {
        let idx = self.grid.index(t);
        self.sum[idx] += x;
        self.count[idx] += 1;
    }

    pub fn restart(&mut self, t: f64) {
        *self = SampleTracker::new(t, self.horizon);
    }

    pub fn count(&self) -> u64 {
        self.count.iter().sum()
    }

    pub fn summary(&self) -> (f64, f64) {
        let n = self.count();
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let mean = self.sum.iter().sum::<f64>() / n as f64;
        let batches: Vec<f64> = self
            .sum
            .iter()
            .zip(&self.count)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / c as f64)
            .collect();
        (mean, mean_ci(&batches).2)
    }
}

/// Least-squares slope of `ys` against `xs`, with the residual standard deviation.
pub fn linear_trend(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    (slope, (rss / (n - 2.0).max(1.0)).sqrt())
}

/// A level is growing when its fitted rise across the window exceeds both
/// half its mean and three residual standard deviations.
pub fn is_growing(xs: &[f64], ys: &[f64]) -> bool {
    if xs.len() < 3 {
        return false;
    }
    let (slope, resid_sd) = linear_trend(xs, ys);
    let rise = slope * (xs[xs.len() - 1] - xs[0]);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    rise > 0.5 * mean.max(1.0) && rise > 3.0 * resid_sd
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantiles() {
        assert!((t_quantile_975(1) - 12.706_204_736).abs() < 1e-6);
        assert!((t_quantile_975(3) - 3.182_446_305).abs() < 1e-6);
        assert!((t_quantile_975(19) - 2.093_024_054).abs() < 1e-6);
    }

    #[test]
    fn level_time_average() {
        let mut lt = LevelTracker::new(0.0, 10.0);
        lt.set(1.0, 2.0);
        lt.set(4.0, 0.0);
        lt.set(9.0, 5.0);
        let (mean, _) = lt.summary();
        assert!((mean - (2.0 * 3.0 + 5.0 * 1.0) / 10.0).abs() < 1e-12);

        let mut lt = LevelTracker::new(0.0, 10.0);
        lt.set(0.0, 3.0);
        lt.set(5.0, 3.0);
        lt.restart(5.0);
        lt.set(7.5, 1.0);
        let (mean, _) = lt.summary();
        assert!((mean - (3.0 * 2.5 + 2.5) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_level_has_zero_width() {
        let mut lt = LevelTracker::new(0.0, 1e7);
        lt.set(0.0, 4.0);
        for i in 1..1000 {
            lt.set(i as f64 * 1e4 + 0.3, 4.0);
        }
        let (mean, hw) = lt.summary();
        assert!((mean - 4.0).abs() < 1e-9 && hw < 1e-9);
    }

    #[test]
    fn sample_means() {
        let mut s = SampleTracker::new(0.0, 100.0);
        for i in 0..200 {
            s.record(i as f64 * 0.5 + 0.25, (i % 2) as f64);
        }
        let (mean, hw) = s.summary();
        assert_eq!(s.count(), 200);
        assert!((mean - 0.5).abs() < 1e-12 && hw < 1e-12);
        assert!(SampleTracker::new(0.0, 1.0).summary().0.is_nan());
    }

    #[test]
    fn growth_detection() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ramp: Vec<f64> = xs.iter().map(|x| 10.0 * x + (x * 7.3).sin()).collect();
        assert!(is_growing(&xs, &ramp));
        let flat: Vec<f64> = xs.iter().map(|x| 20.0 + 5.0 * (x * 1.7).sin()).collect();
        assert!(!is_growing(&xs, &flat));
    }
}
