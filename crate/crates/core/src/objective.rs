//! The black-box objective contract.

use nalgebra::DVector;

use crate::error::{Result, ZoqError};

/// Deterministic objective queried through function values.
///
/// `gradient` is an oracle used for idealized estimation and for reporting;
/// the optimizers never need it in finite-difference mode.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    fn gradient(&self, _x: &DVector<f64>) -> Result<DVector<f64>> {
        Err(ZoqError::Unsupported("a gradient oracle"))
    }

    fn has_gradient(&self) -> bool {
        false
    }

    /// Smoothness constant L.
    fn smoothness(&self) -> f64;

    /// Strong-convexity constant, when the objective has one.
    fn strong_convexity(&self) -> Option<f64> {
        None
    }

    /// Minimizer and minimum value, when known.
    fn optimum(&self) -> Option<(DVector<f64>, f64)> {
        None
    }

    /// Known lower bound on the objective.
    fn lower_bound(&self) -> Option<f64> {
        self.optimum().map(|(_, f)| f)
    }
}

/// Objective of the form `f(x) = E[F(x, xi)]` where a `sample_key`
/// deterministically selects one realization `F(., xi)`.
pub trait StochasticObjective: Objective {
    fn sample_value(&self, x: &DVector<f64>, sample_key: u64) -> Result<f64>;

    fn sample_gradient(&self, x: &DVector<f64>, sample_key: u64) -> Result<DVector<f64>>;

    /// Variance bound of the realization gradients at the optimum.
    fn sigma2(&self) -> Option<f64> {
        None
    }

    /// Held-out estimate of the objective used for reporting.
    fn reported_value(&self, x: &DVector<f64>) -> Result<f64> {
        self.value(x)
    }
}

/// One realization `F(., xi)` of a stochastic objective, viewed as an
/// ordinary deterministic objective.
pub struct Realization<'a, S: StochasticObjective + ?Sized> {
    pub source: &'a S,
    pub sample_key: u64,
}

impl<'a, S: StochasticObjective + ?Sized> Objective for Realization<'a, S> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.source.sample_value(x, self.sample_key)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.source.sample_gradient(x, self.sample_key)
    }

    fn has_gradient(&self) -> bool {
        self.source.has_gradient()
    }

    fn smoothness(&self) -> f64 {
        self.source.smoothness()
    }
}

pub(crate) fn check_dim(x: &DVector<f64>, dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(ZoqError::InvalidArgument(format!(
            "point has length {}, objective dimension is {dim}",
            x.len()
        )));
    }
    Ok(())
}

pub(crate) fn ensure_finite(x: &DVector<f64>, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ZoqError::Numerical(format!("{what} has non-finite entries")))
    }
}

/// Wraps an objective with an externally supplied comparison point, e.g.
/// a long exact-gradient run on data that has no finite minimizer.
pub struct WithOptimum<O> {
    pub inner: O,
    pub x_ref: DVector<f64>,
    pub f_ref: f64,
}

impl<O: Objective> Objective for WithOptimum<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.inner.value(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.inner.gradient(x)
    }

    fn has_gradient(&self) -> bool {
        self.inner.has_gradient()
    }

    fn smoothness(&self) -> f64 {
        self.inner.smoothness()
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.inner.strong_convexity()
    }

    fn optimum(&self) -> Option<(DVector<f64>, f64)> {
        Some((self.x_ref.clone(), self.f_ref))
    }

    fn lower_bound(&self) -> Option<f64> {
        self.inner.lower_bound()
    }
}
