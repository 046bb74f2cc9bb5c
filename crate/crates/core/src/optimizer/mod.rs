//! Budget-constrained zeroth-order descent `x_{t+1} = x_t - eta_t g_hat(x_t)`.

mod schedule;
mod step;

pub use schedule::{allocation_expand, AllocationKind, AllocationSchedule};
pub use step::StepPolicy;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Result, ZoqError};
use crate::estimators::{estimate, EstimatorConfig, EstimatorKind};
use crate::objective::{check_dim, ensure_finite, Objective, Realization, StochasticObjective};
use crate::rng::SeededRng;

/// A replication is aborted once its gap (or value, when no optimum is
/// known) grows past this multiple of the starting level.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

const SAMPLE_KEY_STREAM: u64 = 0x6b65_7973;

/// State after `t` iterations.
///
/// `q_t`, `eta_t` and the cumulative counters describe the step that
/// produced this state; row 0 is the starting point with all of them zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub q_t: usize,
    /// Sum of block sizes so far.
    pub cumulative_queries: usize,
    /// Sum of `q_t + 1` so far, counting the base value of each block.
    pub raw_evaluations: usize,
    pub eta_t: f64,
    /// Objective at `x_t` (held-out estimate for stochastic runs).
    pub f_value: f64,
    /// `f(x_t) - f*` when an optimum or reference point is known.
    pub gap: Option<f64>,
    /// `|grad f(x_t)|^2` from the oracle when available.
    pub grad_norm2: Option<f64>,
    /// Realization value `F(x_t, xi_t)` of the batch drawn at this state.
    pub batch_value: Option<f64>,
}

/// Weighted average of the iterates of a stochastic run.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedIterate {
    pub x_bar: DVector<f64>,
    pub f_value: f64,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub final_x: DVector<f64>,
    pub averaged: Option<AveragedIterate>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryRow {
        self.rows.last().expect("trajectory always holds the starting row")
    }

    pub fn total_queries(&self) -> usize {
        self.last().cumulative_queries
    }
}

struct Reporter {
    f_star: Option<f64>,
    with_grad: bool,
    guard_level: f64,
}

impl Reporter {
    fn new<O: Objective + ?Sized>(obj: &O, f0: f64) -> Self {
        let f_star = obj.optimum().map(|(_, f)| f);
        let start = match f_star {
            Some(fs) => f0 - fs,
            None => f0.abs(),
        };
        Self {
            f_star,
            with_grad: obj.has_gradient(),
            guard_level: DIVERGENCE_FACTOR * start.abs().max(1e-12),
        }
    }

    fn check(&self, t: usize, f: f64, x: &DVector<f64>, last: &DVector<f64>) -> Result<()> {
        let level = match self.f_star {
            Some(fs) => f - fs,
            None => f.abs(),
        };
        let reason = if !f.is_finite() || x.iter().any(|v| !v.is_finite()) {
            Some("non-finite iterate".to_string())
        } else if level > self.guard_level {
            Some(format!(
                "objective level {level:.3e} exceeds guard {:.3e}",
                self.guard_level
            ))
        } else {
            None
        };
        match reason {
            Some(reason) => Err(ZoqError::Divergence {
                iteration: t,
                reason,
                last_finite: last.iter().copied().collect(),
            }),
            None => Ok(()),
        }
    }
}

fn grad_norm2<O: Objective + ?Sized>(obj: &O, x: &DVector<f64>, with: bool) -> Result<Option<f64>> {
    if with {
        Ok(Some(obj.gradient(x)?.norm_squared()))
    } else {
        Ok(None)
    }
}

fn prepare(
    dim: usize,
    est_cfg: &EstimatorConfig,
    sched: &AllocationSchedule,
    policy: &StepPolicy,
    x0: &DVector<f64>,
) -> Result<Vec<usize>> {
    check_dim(x0, dim)?;
    ensure_finite(x0, "starting point")?;
    policy.check_compatible(est_cfg.kind)?;
    let nominal = sched.nominal_q(dim);
    if sched.budget < nominal.max(1) {
        return Err(ZoqError::Configuration(format!(
            "budget {} is smaller than one block of {nominal} queries",
            sched.budget
        )));
    }
    let plan = allocation_expand(sched, dim)?;
    if est_cfg.kind == EstimatorKind::Single && plan.iter().any(|&q| q != 1) {
        return Err(ZoqError::Configuration(
            "single-query estimator needs a single-query schedule".into(),
        ));
    }
    Ok(plan)
}

/// Run the deterministic loop until the budget is spent.
pub fn run_deterministic<O: Objective + ?Sized>(
    obj: &O,
    est_cfg: &EstimatorConfig,
    sched: &AllocationSchedule,
    policy: &StepPolicy,
    x0: &DVector<f64>,
    rng: &mut SeededRng,
) -> Result<Trajectory> {
    let d = obj.dim();
    let plan = prepare(d, est_cfg, sched, policy, x0)?;
    let l = obj.smoothness();
    let f0 = obj.value(x0)?;
    let reporter = Reporter::new(obj, f0);
    let mut x = x0.clone();
    let mut rows = Vec::with_capacity(plan.len() + 1);
    rows.push(TrajectoryRow {
        t: 0,
        q_t: 0,
        cumulative_queries: 0,
        raw_evaluations: 0,
        eta_t: 0.0,
        f_value: f0,
        gap: reporter.f_star.map(|fs| f0 - fs),
        grad_norm2: grad_norm2(obj, &x, reporter.with_grad)?,
        batch_value: None,
    });
    let (mut cum, mut raw) = (0usize, 0usize);
    for (t, &q_t) in plan.iter().enumerate() {
        let cfg = est_cfg.with_q(q_t);
        let est = estimate(obj, &x, &cfg, rng)?;
        let eta = policy.eta(t, q_t, d, l);
        let prev = x.clone();
        x.axpy(-eta, &est.g_hat, 1.0);
        let f = obj.value(&x).unwrap_or(f64::NAN);
        reporter.check(t + 1, f, &x, &prev)?;
        cum += q_t;
        raw += est.queries_used;
        rows.push(TrajectoryRow {
            t: t + 1,
            q_t,
            cumulative_queries: cum,
            raw_evaluations: raw,
            eta_t: eta,
            f_value: f,
            gap: reporter.f_star.map(|fs| f - fs),
            grad_norm2: grad_norm2(obj, &x, reporter.with_grad)?,
            batch_value: None,
        });
    }
    Ok(Trajectory {
        rows,
        final_x: x,
        averaged: None,
    })
}

/// Averaging weight of iterate `t`, matching the estimator's convergence
/// argument: `eta_t (d + 1 - q_t) / q_t` for averaging estimators and
/// `eta_t q_t / d` for alignment.
pub fn averaging_weight(kind: EstimatorKind, eta_t: f64, q_t: usize, dim: usize) -> f64 {
    match kind {
        EstimatorKind::Single | EstimatorKind::Avg => {
            eta_t * (dim as f64 + 1.0 - q_t as f64) / q_t as f64
        }
        EstimatorKind::Align => eta_t * q_t as f64 / dim as f64,
    }
}

/// `sum_t w_t x_t / sum_t w_t`.
pub fn weighted_average(points: &[DVector<f64>], weights: &[f64]) -> Result<DVector<f64>> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(ZoqError::InvalidArgument(format!(
            "{} points and {} weights",
            points.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(ZoqError::InvalidArgument(format!(
            "averaging weights sum to {total}"
        )));
    }
    let mut acc = DVector::zeros(points[0].len());
    for (p, w) in points.iter().zip(weights) {
        acc.axpy(*w / total, p, 1.0);
    }
    Ok(acc)
}

/// Stochastic loop: iteration `t` draws one sample key, builds the estimate
/// from the realization `F(., xi_t)`, and the run also reports the weighted
/// average iterate.
///
/// Sample keys come from a stream derived from `rng`, so the direction
/// blocks are the same draws a deterministic run with the same seed uses.
pub fn run_stochastic<S: StochasticObjective + ?Sized>(
    obj: &S,
    est_cfg: &EstimatorConfig,
    sched: &AllocationSchedule,
    policy: &StepPolicy,
    x0: &DVector<f64>,
    rng: &mut SeededRng,
) -> Result<Trajectory> {
    let d = obj.dim();
    let l = obj.smoothness();
    let eta0 = match *policy {
        StepPolicy::DiminishingSqrt { eta0 } => eta0,
        _ => {
            return Err(ZoqError::Configuration(
                "stochastic runs use the diminishing step policy".into(),
            ))
        }
    };
    if !(eta0 > 0.0) || eta0 > 1.0 / (4.0 * l) * (1.0 + 1e-12) {
        return Err(ZoqError::Configuration(format!(
            "eta0 = {eta0} must lie in (0, 1/(4L)] = (0, {}]",
            1.0 / (4.0 * l)
        )));
    }
    let plan = prepare(d, est_cfg, sched, policy, x0)?;
    let mut keys = rng.derive(SAMPLE_KEY_STREAM);
    let f0_true = obj.value(x0)?;
    let reporter = Reporter::new(obj, f0_true);
    let report = |x: &DVector<f64>| -> Result<(f64, Option<f64>, Option<f64>)> {
        let f = obj.reported_value(x)?;
        let gap = match reporter.f_star {
            Some(fs) => Some(obj.value(x)? - fs),
            None => None,
        };
        Ok((f, gap, grad_norm2(obj, x, reporter.with_grad)?))
    };

    let mut x = x0.clone();
    let mut iterates = Vec::with_capacity(plan.len());
    let mut weights = Vec::with_capacity(plan.len());
    let mut rows = Vec::with_capacity(plan.len() + 1);
    let (f, gap, g2) = report(&x)?;
    rows.push(TrajectoryRow {
        t: 0,
        q_t: 0,
        cumulative_queries: 0,
        raw_evaluations: 0,
        eta_t: 0.0,
        f_value: f,
        gap,
        grad_norm2: g2,
        batch_value: None,
    });
    let (mut cum, mut raw) = (0usize, 0usize);
    for (t, &q_t) in plan.iter().enumerate() {
        let key = keys.next_u64();
        let realization = Realization {
            source: obj,
            sample_key: key,
        };
        rows[t].batch_value = Some(realization.value(&x)?);
        let cfg = est_cfg.with_q(q_t);
        let est = estimate(&realization, &x, &cfg, rng)?;
        let eta = policy.eta(t, q_t, d, l);
        iterates.push(x.clone());
        weights.push(averaging_weight(est_cfg.kind, eta, q_t, d));
        let prev = x.clone();
        x.axpy(-eta, &est.g_hat, 1.0);
        let f_true = obj.value(&x).unwrap_or(f64::NAN);
        reporter.check(t + 1, f_true, &x, &prev)?;
        cum += q_t;
        raw += est.queries_used;
        let (f, gap, g2) = report(&x)?;
        rows.push(TrajectoryRow {
            t: t + 1,
            q_t,
            cumulative_queries: cum,
            raw_evaluations: raw,
            eta_t: eta,
            f_value: f,
            gap,
            grad_norm2: g2,
            batch_value: None,
        });
    }
    let x_bar = weighted_average(&iterates, &weights)?;
    let averaged = AveragedIterate {
        f_value: obj.reported_value(&x_bar)?,
        gap: match reporter.f_star {
            Some(fs) => Some(obj.value(&x_bar)? - fs),
            None => None,
        },
        x_bar,
    };
    Ok(Trajectory {
        rows,
        final_x: x,
        averaged: Some(averaged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_quadratic, QuadraticObjective};
    use nalgebra::DMatrix;

    fn quad(d: usize, seed: u64) -> QuadraticObjective {
        make_quadratic(d, 1.0, &mut SeededRng::new(seed, 0)).unwrap()
    }

    #[test]
    fn one_dimensional_align_step_lands_on_optimum() {
        let l = 3.0;
        let obj = QuadraticObjective::new(DMatrix::from_element(1, 1, l), DVector::zeros(1)).unwrap();
        let traj = run_deterministic(
            &obj,
            &EstimatorConfig::idealized(EstimatorKind::Align, 1),
            &AllocationSchedule::new(AllocationKind::FullSubspace, 1),
            &StepPolicy::AlignOptimal,
            &DVector::from_element(1, 1.0),
            &mut SeededRng::new(0, 0),
        )
        .unwrap();
        assert_eq!(traj.rows.len(), 2);
        assert!(traj.final_x[0].abs() < 1e-15);
        assert!(traj.last().gap.unwrap().abs() < 1e-15);
    }

    #[test]
    fn budget_and_step_logging() {
        let obj = quad(6, 1);
        let x0 = DVector::from_element(6, 1.0);
        let traj = run_deterministic(
            &obj,
            &EstimatorConfig::idealized(EstimatorKind::Avg, 4),
            &AllocationSchedule::new(AllocationKind::ConstantQ(4), 30),
            &StepPolicy::AvgOptimal,
            &x0,
            &mut SeededRng::new(2, 0),
        )
        .unwrap();
        assert_eq!(traj.total_queries(), 30);
        assert_eq!(traj.last().raw_evaluations, 30 + 8);
        for w in traj.rows.windows(2) {
            assert!(w[1].cumulative_queries > w[0].cumulative_queries);
            let r = &w[1];
            let expected = r.q_t as f64 / (obj.smoothness() * (r.q_t + 6 + 1) as f64);
            assert!((r.eta_t - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn idealized_align_descends_monotonically() {
        let obj = quad(12, 3);
        for q in [1, 5, 12] {
            let traj = run_deterministic(
                &obj,
                &EstimatorConfig::idealized(EstimatorKind::Align, q),
                &AllocationSchedule::new(AllocationKind::ConstantQ(q), 240),
                &StepPolicy::AlignOptimal,
                &DVector::from_element(12, -1.0),
                &mut SeededRng::new(4, q as u64),
            )
            .unwrap();
            for w in traj.rows.windows(2) {
                assert!(w[1].f_value <= w[0].f_value + 1e-12 * w[0].f_value.abs());
            }
        }
    }

    #[test]
    fn configuration_errors() {
        let obj = quad(4, 5);
        let x0 = DVector::zeros(4);
        let mut rng = SeededRng::new(0, 0);
        let small_budget = run_deterministic(
            &obj,
            &EstimatorConfig::idealized(EstimatorKind::Align, 4),
            &AllocationSchedule::new(AllocationKind::FullSubspace, 3),
            &StepPolicy::AlignOptimal,
            &x0,
            &mut rng,
        );
        assert!(matches!(small_budget, Err(ZoqError::Configuration(_))));
        let mismatch = run_deterministic(
            &obj,
            &EstimatorConfig::idealized(EstimatorKind::Avg, 2),
            &AllocationSchedule::new(AllocationKind::ConstantQ(2), 10),
            &StepPolicy::AlignOptimal,
            &x0,
            &mut rng,
        );
        assert!(matches!(mismatch, Err(ZoqError::Configuration(_))));
    }

    #[test]
    fn oversized_steps_are_reported_as_divergence() {
        let obj = quad(5, 6);
        let traj = run_deterministic(
            &obj,
            &EstimatorConfig::idealized(EstimatorKind::Align, 5),
            &AllocationSchedule::new(AllocationKind::FullSubspace, 500),
            &StepPolicy::DiminishingSqrt { eta0: 50.0 / obj.smoothness() },
            &DVector::from_element(5, 1.0),
            &mut SeededRng::new(0, 0),
        );
        match traj {
            Err(ZoqError::Divergence { last_finite, .. }) => {
                assert!(last_finite.iter().all(|v| v.is_finite()))
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn uniform_weights_give_arithmetic_mean() {
        let mut rng = SeededRng::new(7, 0);
        let pts: Vec<_> = (0..9)
            .map(|_| DVector::from_iterator(4, (0..4).map(|_| rng.normal())))
            .collect();
        let avg = weighted_average(&pts, &[0.3; 9]).unwrap();
        let mean = pts.iter().fold(DVector::zeros(4), |a, p| a + p) / 9.0;
        for (a, b) in avg.iter().zip(mean.iter()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn averaging_weights() {
        assert_eq!(averaging_weight(EstimatorKind::Avg, 0.5, 2, 10), 0.5 * 9.0 / 2.0);
        assert_eq!(averaging_weight(EstimatorKind::Align, 0.5, 2, 10), 0.1);
    }
}
