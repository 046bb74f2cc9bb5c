//! Right-hand sides of the convergence guarantees, evaluated along an
//! allocation schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoqError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    /// Averaging, strongly convex: product of `1 - mu q / (L (q + d + 1))`.
    T1,
    /// Alignment, strongly convex: product of `1 - mu q / (L d)`.
    T2,
    /// Averaging, convex.
    T3,
    /// Alignment, convex.
    T4,
    /// Averaging, smooth: bound on `min_s E|grad f(x_s)|^2`.
    T5,
    /// Alignment, smooth: bound on the mean of `E|grad f(x_s)|^2`.
    T6,
    /// Averaging, stochastic convex, weighted-average iterate.
    T7,
    /// Alignment, stochastic convex, weighted-average iterate.
    T8,
}

impl Theorem {
    pub const ALL: [Theorem; 8] = [
        Theorem::T1,
        Theorem::T2,
        Theorem::T3,
        Theorem::T4,
        Theorem::T5,
        Theorem::T6,
        Theorem::T7,
        Theorem::T8,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Theorem::T1 => "T1",
            Theorem::T2 => "T2",
            Theorem::T3 => "T3",
            Theorem::T4 => "T4",
            Theorem::T5 => "T5",
            Theorem::T6 => "T6",
            Theorem::T7 => "T7",
            Theorem::T8 => "T8",
        }
    }

    /// Whether the bound is a contraction that is defined before any step.
    fn starts_at_zero(self) -> bool {
        matches!(self, Theorem::T1 | Theorem::T2)
    }
}

/// Problem constants and starting-point data the bounds are stated in.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundInputs {
    pub dim: usize,
    pub smoothness: f64,
    pub strong_convexity: Option<f64>,
    /// `f(x0) - f*`
    pub gap0: Option<f64>,
    /// `|x0 - x*|^2`
    pub dist0_sq: Option<f64>,
    pub sigma2: Option<f64>,
    pub eta0: Option<f64>,
}

impl BoundInputs {
    pub fn new(dim: usize, smoothness: f64) -> Self {
        Self { dim, smoothness, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub theorem: Theorem,
    /// Iteration index of `values[0]`. Sum-type bounds start at `t = 1`.
    pub first_t: usize,
    pub values: Vec<f64>,
}

impl BoundCurve {
    /// Bound after `t` completed iterations.
    pub fn at(&self, t: usize) -> Option<f64> {
        t.checked_sub(self.first_t).and_then(|i| self.values.get(i).copied())
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("bound curves are never empty")
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (i + self.first_t, v))
    }
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    match v {
        Some(x) if x.is_finite() => Ok(x),
        Some(x) => Err(ZoqError::Configuration(format!("constant {name} is not finite ({x})"))),
        None => Err(ZoqError::Configuration(format!("bound requires the constant {name}"))),
    }
}

/// Evaluates the bound of `theorem` after each iteration of the schedule
/// `q_plan` (one entry per iteration).
pub fn bound_curve(theorem: Theorem, inputs: &BoundInputs, q_plan: &[usize]) -> Result<BoundCurve> {
    let d = inputs.dim;
    let l = inputs.smoothness;
    if d == 0 {
        return Err(ZoqError::InvalidArgument("dimension must be positive".into()));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(ZoqError::Configuration(format!("constant L must be positive, got {l}")));
    }
    if q_plan.is_empty() {
        return Err(ZoqError::InvalidArgument("empty allocation schedule".into()));
    }
    if let Some(&bad) = q_plan.iter().find(|&&q| q == 0 || q > d) {
        return Err(ZoqError::InvalidArgument(format!("q_t = {bad} outside 1..={d}")));
    }
    let df = d as f64;

    let mut values = Vec::with_capacity(q_plan.len() + 1);
    match theorem {
        Theorem::T1 | Theorem::T2 => {
            let mu = need(inputs.strong_convexity, "mu (strong convexity)")?;
            let gap0 = need(inputs.gap0, "f(x0) - f*")?;
            let mut v = gap0;
            values.push(v);
            for &q in q_plan {
                let q = q as f64;
                let c = match theorem {
                    Theorem::T1 => mu * q / (l * (q + df + 1.0)),
                    _ => mu * q / (l * df),
                };
                v *= (1.0 - c).max(0.0);
                values.push(v);
            }
        }
        Theorem::T3 | Theorem::T4 => {
            let gap0 = need(inputs.gap0, "f(x0) - f*")?;
            let r2 = need(inputs.dist0_sq, "|x0 - x*|^2")?;
            let mut sum = 0.0;
            for &q in q_plan {
                let q = q as f64;
                values.push(match theorem {
                    Theorem::T3 => {
                        sum += 2.0 * q / (q + df + 1.0);
                        l * (r2 + 2.0 / l * gap0) / sum
                    }
                    _ => {
                        sum += q;
                        df / (2.0 * sum) * (l * r2 + 2.0 * gap0)
                    }
                });
            }
        }
        Theorem::T5 | Theorem::T6 => {
            let gap0 = need(inputs.gap0, "f(x0) - f*")?;
            let mut sum = 0.0;
            for &q in q_plan {
                let q = q as f64;
                values.push(match theorem {
                    Theorem::T5 => {
                        sum += q / (q + df + 1.0);
                        2.0 * l * gap0 / sum
                    }
                    _ => {
                        sum += q;
                        2.0 * l * df * gap0 / sum
                    }
                });
            }
        }
        Theorem::T7 | Theorem::T8 => {
            let r2 = need(inputs.dist0_sq, "|x0 - x*|^2")?;
            let sigma2 = need(inputs.sigma2, "sigma^2")?;
            let eta0 = need(inputs.eta0, "eta0")?;
            if eta0 <= 0.0 {
                return Err(ZoqError::Configuration(format!("eta0 must be positive, got {eta0}")));
            }
            let (mut num, mut den) = (0.0, 0.0);
            for (t, &q) in q_plan.iter().enumerate() {
                let q = q as f64;
                let tp = (t + 1) as f64;
                match theorem {
                    Theorem::T7 => {
                        num += (q + df + 1.0) / (q * tp);
                        den += (df + 1.0 - q) / (q * tp.sqrt());
                        values.push((r2 + 2.0 * eta0 * eta0 * sigma2 * num) / (eta0 * den));
                    }
                    _ => {
                        num += q / tp;
                        den += q / tp.sqrt();
                        values.push((df * r2 + 2.0 * eta0 * eta0 * sigma2 * num) / (eta0 * den));
                    }
                }
            }
        }
    }
    Ok(BoundCurve {
        theorem,
        first_t: if theorem.starts_at_zero() { 0 } else { 1 },
        values,
    })
}

/// Right-hand side `4 L (f(x) - f*) + 2 sigma^2` of the bound on the second
/// moment of a stochastic gradient.
pub fn stochastic_second_moment_bound(l: f64, gap: f64, sigma2: f64) -> f64 {
    4.0 * l * gap + 2.0 * sigma2
}
