//! Sample mean and standard-error helpers.

/// Running sums for the mean and variance of a scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let mut m = Moments::default();
    for &x in xs {
        m.push(x);
    }
    (m.mean(), m.stderr())
}

/// `(observed - expected) / stderr`, with `stderr` floored at `floor` so
/// that exactly reproduced zero-variance quantities give a finite score.
pub fn z_score(observed: f64, expected: f64, stderr: f64, floor: f64) -> f64 {
    (observed - expected) / stderr.max(floor).max(f64::MIN_POSITIVE)
}
