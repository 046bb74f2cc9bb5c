//! Monte Carlo checks of the idealized estimator moments.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{z_score, Moments};
use crate::error::{Result, ZoqError};
use crate::estimators::{estimate, EstimatorConfig, EstimatorKind};
use crate::objective::Objective;
use crate::rng::SeededRng;

pub const MIN_SAMPLES: usize = 1_000;

/// Monte Carlo work is split into this many independent streams and merged
/// in stream order, so results do not depend on the thread count.
const CHUNKS: usize = 64;

/// `E|g_hat - g|^2` of the idealized estimators:
/// `(d + 1) / q |g|^2` for averaging and `(d - q) / d |g|^2` for alignment.
pub fn mse_closed_form(kind: EstimatorKind, d: usize, q: usize, g_norm2: f64) -> Result<f64> {
    if d < 1 || q < 1 || q > d {
        return Err(ZoqError::InvalidArgument(format!(
            "need 1 <= q <= d, got d={d}, q={q}"
        )));
    }
    if kind == EstimatorKind::Single && q != 1 {
        return Err(ZoqError::InvalidArgument("single-query estimator has q = 1".into()));
    }
    if !(g_norm2 >= 0.0) {
        return Err(ZoqError::InvalidArgument(format!("|g|^2 must be >= 0, got {g_norm2}")));
    }
    let (d, q) = (d as f64, q as f64);
    Ok(match kind {
        EstimatorKind::Single | EstimatorKind::Avg => (d + 1.0) / q * g_norm2,
        EstimatorKind::Align => (d - q) / d * g_norm2,
    })
}

/// `E|g_hat|^2`: `(q + d + 1) / q |g|^2` for averaging, `q / d |g|^2` for
/// alignment.
pub fn second_moment_closed_form(kind: EstimatorKind, d: usize, q: usize, g_norm2: f64) -> Result<f64> {
    mse_closed_form(kind, d, q, g_norm2)?;
    let (d, q) = (d as f64, q as f64);
    Ok(match kind {
        EstimatorKind::Single | EstimatorKind::Avg => (q + d + 1.0) / q * g_norm2,
        EstimatorKind::Align => q / d * g_norm2,
    })
}

/// `E[g_hat]`: the gradient itself for averaging, `(q / d) g` for alignment.
pub fn expected_estimate(kind: EstimatorKind, d: usize, q: usize, g: &DVector<f64>) -> DVector<f64> {
    match kind {
        EstimatorKind::Single | EstimatorKind::Avg => g.clone(),
        EstimatorKind::Align => g * (q as f64 / d as f64),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub kind: EstimatorKind,
    pub d: usize,
    pub q: usize,
    pub n: usize,
    pub g_norm2: f64,
    #[serde(skip)]
    pub mean: DVector<f64>,
    #[serde(skip)]
    pub mean_stderr: DVector<f64>,
    pub mse_empirical: f64,
    pub mse_closed_form: f64,
    pub mse_stderr: f64,
    pub z_score: f64,
    pub second_moment_empirical: f64,
    pub second_moment_closed_form: f64,
    pub second_moment_stderr: f64,
    pub second_moment_z: f64,
}

impl MomentReport {
    /// Per-coordinate z-scores of the sample mean against `E[g_hat]`.
    pub fn mean_z_scores(&self, g: &DVector<f64>) -> DVector<f64> {
        let target = expected_estimate(self.kind, self.d, self.q, g);
        let floor = rounding_floor(self.g_norm2.sqrt());
        DVector::from_iterator(
            self.d,
            (0..self.d).map(|i| z_score(self.mean[i], target[i], self.mean_stderr[i], floor)),
        )
    }

    /// Largest absolute per-coordinate mean z-score.
    pub fn max_mean_z(&self, g: &DVector<f64>) -> f64 {
        self.mean_z_scores(g).amax()
    }
}

/// Floor for standard errors, relative to the natural scale of the
/// quantity. With alignment at `q = d` every sample equals the gradient up
/// to rounding and the sample spread alone would turn rounding into large
/// z-scores.
pub fn rounding_floor(scale: f64) -> f64 {
    1e-12 * scale.max(f64::MIN_POSITIVE)
}

#[derive(Clone)]
struct Accum {
    sum: DVector<f64>,
    sum_sq: DVector<f64>,
    err: Moments,
    norm2: Moments,
}

impl Accum {
    fn new(d: usize) -> Self {
        Self {
            sum: DVector::zeros(d),
            sum_sq: DVector::zeros(d),
            err: Moments::default(),
            norm2: Moments::default(),
        }
    }

    fn merge(&mut self, o: &Accum) {
        self.sum += &o.sum;
        self.sum_sq += &o.sum_sq;
        self.err.merge(&o.err);
        self.norm2.merge(&o.norm2);
    }
}

/// Empirical MSE, mean and second moment of an idealized estimator over `n`
/// fresh direction blocks at the point `x`.
pub fn mse_monte_carlo<O: Objective + ?Sized>(
    kind: EstimatorKind,
    obj: &O,
    x: &DVector<f64>,
    q: usize,
    n: usize,
    rng: &SeededRng,
) -> Result<MomentReport> {
    if n < MIN_SAMPLES {
        return Err(ZoqError::InvalidArgument(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if !obj.has_gradient() {
        return Err(ZoqError::Unsupported("a gradient oracle"));
    }
    let d = obj.dim();
    let g = obj.gradient(x)?;
    let g_norm2 = g.norm_squared();
    let cfg = EstimatorConfig::idealized(kind, q);
    cfg.validate(d)?;

    let parts: Vec<Result<Accum>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let count = n / CHUNKS + usize::from(c < n % CHUNKS);
            let mut stream = rng.derive(c as u64);
            let mut acc = Accum::new(d);
            for _ in 0..count {
                let est = estimate(obj, x, &cfg, &mut stream)?;
                let gh = &est.g_hat;
                acc.sum += gh;
                acc.sum_sq += gh.component_mul(gh);
                acc.err.push((gh - &g).norm_squared());
                acc.norm2.push(gh.norm_squared());
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accum::new(d);
    for p in parts {
        total.merge(&p?);
    }

    let nf = n as f64;
    let mean = &total.sum / nf;
    let mean_stderr = DVector::from_iterator(
        d,
        (0..d).map(|i| {
            let var = ((total.sum_sq[i] - total.sum[i] * total.sum[i] / nf) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        }),
    );
    let mse_closed = mse_closed_form(kind, d, q, g_norm2)?;
    let m2_closed = second_moment_closed_form(kind, d, q, g_norm2)?;
    let floor = rounding_floor(g_norm2);
    Ok(MomentReport {
        kind,
        d,
        q,
        n,
        g_norm2,
        mean,
        mean_stderr,
        mse_empirical: total.err.mean(),
        mse_closed_form: mse_closed,
        mse_stderr: total.err.stderr(),
        z_score: z_score(total.err.mean(), mse_closed, total.err.stderr(), floor),
        second_moment_empirical: total.norm2.mean(),
        second_moment_closed_form: m2_closed,
        second_moment_stderr: total.norm2.stderr(),
        second_moment_z: z_score(total.norm2.mean(), m2_closed, total.norm2.stderr(), floor),
    })
}
