//! Multi-query gradient estimators built from function-value queries.
//!
//! Each estimator draws a block `U = [u_1, ..., u_q]` of Gaussian directions
//! and measures the directional derivatives `s_i ~ u_i^T grad f(x)`:
//!
//! * single query: `g = s_1 u_1`
//! * averaging:    `g = (1/q) sum_i s_i u_i = (1/q) U s`
//! * alignment:    `g = U y` with `U^T U y = s`, so `u_i^T g = s_i` for every
//!   direction. In the idealized limit this is the orthogonal projection of
//!   the gradient onto `span(U)`.
//!
//! In finite-difference mode `s_i = (f(x + h u_i) - f(x)) / h` with one shared
//! base value `f(x)`. In idealized mode `s_i = u_i^T grad f(x)` is taken from
//! the gradient oracle, which removes the Taylor remainder and leaves only the
//! geometric error of the aggregation rule.

use nalgebra::{ColPivQR, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::block::{sample_direction_block, DirectionBlock};
use crate::error::{Result, ZoqError};
use crate::objective::{check_dim, Objective};
use crate::rng::SeededRng;

/// Blocks whose pivoted-QR condition estimate exceeds this are rejected.
pub const DEGENERACY_THRESHOLD: f64 = 1e8;

/// Default relative smoothing coefficient: `h = 1e-6 * (1 + |x|)`.
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Single,
    Avg,
    Align,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Single => "single",
            EstimatorKind::Avg => "avg",
            EstimatorKind::Align => "align",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    FiniteDifference,
    IdealizedOracle,
}

/// Finite-difference step rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// `h` used as given.
    Fixed(f64),
    /// `h = c * (1 + |x|)`.
    Relative(f64),
}

impl Smoothing {
    pub fn step(self, x: &DVector<f64>) -> f64 {
        match self {
            Smoothing::Fixed(h) => h,
            Smoothing::Relative(c) => c * (1.0 + x.norm()),
        }
    }

    fn coefficient(self) -> f64 {
        match self {
            Smoothing::Fixed(h) | Smoothing::Relative(h) => h,
        }
    }
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Relative(DEFAULT_SMOOTHING)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub q: usize,
    pub smoothing: Smoothing,
    pub mode: EstimatorMode,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind, q: usize, mode: EstimatorMode) -> Self {
        Self {
            kind,
            q,
            smoothing: Smoothing::default(),
            mode,
        }
    }

    pub fn idealized(kind: EstimatorKind, q: usize) -> Self {
        Self::new(kind, q, EstimatorMode::IdealizedOracle)
    }

    pub fn finite_difference(kind: EstimatorKind, q: usize, smoothing: Smoothing) -> Self {
        Self {
            kind,
            q,
            smoothing,
            mode: EstimatorMode::FiniteDifference,
        }
    }

    /// Same estimator with a different block size.
    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.q < 1 || self.q > dim {
            return Err(ZoqError::InvalidArgument(format!(
                "block size q={} outside [1, {dim}]",
                self.q
            )));
        }
        if self.kind == EstimatorKind::Single && self.q != 1 {
            return Err(ZoqError::InvalidArgument(format!(
                "single-query estimator needs q = 1, got {}",
                self.q
            )));
        }
        let c = self.smoothing.coefficient();
        if !(c > 0.0 && c.is_finite()) {
            return Err(ZoqError::InvalidArgument(format!(
                "smoothing must be positive and finite, got {c}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GradientEstimate {
    pub g_hat: DVector<f64>,
    pub kind: EstimatorKind,
    pub q: usize,
    /// Finite-difference step actually used.
    pub smoothing: f64,
    /// `q` perturbed points plus the shared base value.
    pub queries_used: usize,
    /// Measured directional derivatives, one per direction.
    pub dir_derivs: DVector<f64>,
    /// Block the estimate was built from.
    pub block: DirectionBlock,
}

pub fn estimate_single<O: Objective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    cfg: &EstimatorConfig,
    rng: &mut SeededRng,
) -> Result<GradientEstimate> {
    expect_kind(cfg, EstimatorKind::Single)?;
    estimate(obj, x, cfg, rng)
}

pub fn estimate_avg<O: Objective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    cfg: &EstimatorConfig,
    rng: &mut SeededRng,
) -> Result<GradientEstimate> {
    expect_kind(cfg, EstimatorKind::Avg)?;
    estimate(obj, x, cfg, rng)
}

pub fn estimate_align<O: Objective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    cfg: &EstimatorConfig,
    rng: &mut SeededRng,
) -> Result<GradientEstimate> {
    expect_kind(cfg, EstimatorKind::Align)?;
    estimate(obj, x, cfg, rng)
}

fn expect_kind(cfg: &EstimatorConfig, kind: EstimatorKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(ZoqError::InvalidArgument(format!(
            "expected a {} configuration, got {}",
            kind.label(),
            cfg.kind.label()
        )));
    }
    Ok(())
}

/// Draw a fresh block and build the estimate selected by `cfg.kind`.
///
/// For the alignment estimator a numerically degenerate block is redrawn
/// once before giving up with [`ZoqError::DegenerateBlock`].
pub fn estimate<O: Objective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    cfg: &EstimatorConfig,
    rng: &mut SeededRng,
) -> Result<GradientEstimate> {
    cfg.validate(obj.dim())?;
    check_dim(x, obj.dim())?;
    let block = sample_direction_block(obj.dim(), cfg.q, rng)?;
    match estimate_with_block(obj, x, cfg, block) {
        Err(ZoqError::DegenerateBlock { .. }) if cfg.kind == EstimatorKind::Align => {
            let block = sample_direction_block(obj.dim(), cfg.q, rng)?;
            estimate_with_block(obj, x, cfg, block)
        }
        other => other,
    }
}

/// Build an estimate from a caller-supplied block.
pub fn estimate_with_block<O: Objective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    cfg: &EstimatorConfig,
    block: DirectionBlock,
) -> Result<GradientEstimate> {
    check_dim(x, obj.dim())?;
    if block.dim() != obj.dim() || block.q() != cfg.q {
        return Err(ZoqError::InvalidArgument(format!(
            "block is {}x{}, expected {}x{}",
            block.dim(),
            block.q(),
            obj.dim(),
            cfg.q
        )));
    }
    cfg.validate(obj.dim())?;
    let (dir_derivs, h) = directional_derivatives(obj, x, cfg, &block.directions)?;
    let u = &block.directions;
    let g_hat = match cfg.kind {
        EstimatorKind::Single | EstimatorKind::Avg => (u * &dir_derivs) / cfg.q as f64,
        EstimatorKind::Align => align_solve(u, &dir_derivs)?,
    };
    if g_hat.iter().any(|v| !v.is_finite()) {
        return Err(ZoqError::Numerical("gradient estimate is not finite".into()));
    }
    Ok(GradientEstimate {
        g_hat,
        kind: cfg.kind,
        q: cfg.q,
        smoothing: h,
        queries_used: cfg.q + 1,
        dir_derivs,
        block,
    })
}

fn directional_derivatives<O: Objective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    cfg: &EstimatorConfig,
    u: &DMatrix<f64>,
) -> Result<(DVector<f64>, f64)> {
    let h = cfg.smoothing.step(x);
    match cfg.mode {
        EstimatorMode::IdealizedOracle => {
            let g = obj.gradient(x)?;
            Ok((u.tr_mul(&g), h))
        }
        EstimatorMode::FiniteDifference => {
            let f0 = checked_value(obj, x)?;
            // all directions are drawn before any query, so evaluation order
            // cannot change the result
            let mut s = DVector::zeros(u.ncols());
            let mut probe = x.clone();
            for (i, col) in u.column_iter().enumerate() {
                probe.copy_from(x);
                probe.axpy(h, &col, 1.0);
                s[i] = (checked_value(obj, &probe)? - f0) / h;
            }
            Ok((s, h))
        }
    }
}

fn checked_value<O: Objective + ?Sized>(obj: &O, x: &DVector<f64>) -> Result<f64> {
    let v = obj.value(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ZoqError::Evaluation {
            value: v,
            point: x.iter().copied().collect(),
        })
    }
}

/// Solve `U^T U y = s` and return `U y`.
///
/// With the pivoted factorization `U = Q R P` the normal equations collapse
/// to `R^T v = P s` and `U y = Q v`, so `(U^T U)^{-1}` is never formed.
pub fn align_solve(u: &DMatrix<f64>, s: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = ColPivQR::new(u.clone());
    let r = qr.r();
    let q = u.ncols();
    let top = r[(0, 0)].abs();
    let bottom = r[(q - 1, q - 1)].abs();
    let condition = if bottom > 0.0 { top / bottom } else { f64::INFINITY };
    if !(condition <= DEGENERACY_THRESHOLD) {
        return Err(ZoqError::DegenerateBlock { condition });
    }
    let mut z = s.clone();
    qr.p().permute_rows(&mut z);
    let v = r
        .tr_solve_upper_triangular(&z)
        .ok_or(ZoqError::DegenerateBlock { condition })?;
    Ok(qr.q() * v)
}

/// `max_i |u_i^T g_hat - s_i|`: how far the estimate is from reproducing the
/// measured directional derivatives.
pub fn projection_residual(est: &GradientEstimate, block: &DirectionBlock) -> Result<f64> {
    if block.q() != est.q || block.q() != est.dir_derivs.len() || block.dim() != est.g_hat.len() {
        return Err(ZoqError::InvalidArgument(format!(
            "estimate (d={}, q={}) does not match block (d={}, q={})",
            est.g_hat.len(),
            est.q,
            block.dim(),
            block.q()
        )));
    }
    let proj = block.directions.tr_mul(&est.g_hat);
    Ok((proj - &est.dir_derivs).amax())
}
