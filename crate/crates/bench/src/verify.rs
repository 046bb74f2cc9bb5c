//! Monte Carlo battery behind `zoq verify`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use zoq_core::analysis::stats::{z_score, Moments};
use zoq_core::analysis::{
    bound_curve, mse_monte_carlo, rounding_floor, BoundInputs, MomentReport, Theorem,
};
use zoq_core::estimators::{estimate, projection_residual, EstimatorConfig, EstimatorKind};
use zoq_core::objectives::QuadraticObjective;
use zoq_core::optimizer::{allocation_expand, run_deterministic, AllocationKind, AllocationSchedule, StepPolicy};
use zoq_core::{Objective, SeededRng};

use crate::error::BenchError;

pub const DIM: usize = 20;
const MSE_QS: [usize; 4] = [1, 5, 10, 20];
const SECOND_MOMENT_QS: [usize; 3] = [1, 5, 20];
const PROJECTION_DRAWS: usize = 1000;
const BOUND_BUDGET: usize = 400;

const MSE_BAND: f64 = 4.0;
/// Two-sided level of a single 3 standard error band.
const THREE_SIGMA_LEVEL: f64 = 0.0027;
const BOUND_BAND: f64 = 3.0;
const PROJECTION_TOL: f64 = 1e-8;
const FULL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub samples: usize,
    pub replications: usize,
    /// Use `d + 2` in place of `d + 1` in the averaging MSE. Every averaging
    /// MSE check should then fail.
    pub inject_wrong_constant: bool,
}

impl VerifyOptions {
    pub fn quick() -> Self {
        Self { seed: 7, samples: 10_000, replications: 50, inject_wrong_constant: false }
    }

    pub fn full() -> Self {
        Self { seed: 7, samples: 100_000, replications: 200, inject_wrong_constant: false }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub band: f64,
    pub pass: bool,
}

impl Check {
    fn within(name: String, statistic: f64, band: f64) -> Self {
        Self { pass: statistic.abs() <= band, name, statistic, band }
    }
}

pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub moments: Vec<MomentReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<34} {:>14} {:>10}  result\n", "check", "statistic", "band");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<34} {:>14.4e} {:>10.2e}  {}",
                c.name,
                c.statistic,
                c.band,
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        s
    }

    pub fn write_moments_csv(&self, path: &Path) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_path(path)?;
        for m in &self.moments {
            w.serialize(m)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The fixed quadratic and evaluation point the battery runs on.
pub fn test_problem(seed: u64) -> zoq_core::Result<(QuadraticObjective, DVector<f64>)> {
    let obj = QuadraticObjective::random(DIM, 1.0, &mut SeededRng::new(seed, 0))?;
    let mut rng = SeededRng::new(seed, 1);
    let x = DVector::from_iterator(DIM, (0..DIM).map(|_| rng.normal()));
    Ok((obj, x))
}

fn kind_name(kind: EstimatorKind) -> &'static str {
    match kind {
        EstimatorKind::Align => "align",
        _ => "avg",
    }
}

/// Band on the largest per-coordinate mean z-score that keeps the whole
/// battery at the level of one 3 standard error check.
pub fn mean_band(coordinates: usize) -> f64 {
    let n = Normal::standard();
    -n.inverse_cdf(THREE_SIGMA_LEVEL / (2.0 * coordinates as f64))
}

pub fn run_battery(opts: &VerifyOptions) -> zoq_core::Result<VerifyReport> {
    let (obj, x) = test_problem(opts.seed)?;
    let band = mean_band(2 * MSE_QS.len() * DIM);
    let g = obj.gradient(&x)?;
    let mut checks = Vec::new();
    let mut moments = Vec::new();
    let mc = SeededRng::new(opts.seed, 2);

    for (k, kind) in [EstimatorKind::Avg, EstimatorKind::Align].into_iter().enumerate() {
        for q in MSE_QS {
            let rng = mc.derive((k * 100 + q) as u64);
            let r = mse_monte_carlo(kind, &obj, &x, q, opts.samples, &rng)?;
            let name = kind_name(kind);
            let z = if opts.inject_wrong_constant && kind == EstimatorKind::Avg {
                let wrong = (DIM as f64 + 2.0) / q as f64 * r.g_norm2;
                z_score(r.mse_empirical, wrong, r.mse_stderr, rounding_floor(r.g_norm2))
            } else {
                r.z_score
            };
            checks.push(Check::within(format!("mse {name} q={q}"), z, MSE_BAND));
            checks.push(Check::within(format!("mean {name} q={q} (max |z|)"), r.max_mean_z(&g), band));
            if kind == EstimatorKind::Avg && SECOND_MOMENT_QS.contains(&q) {
                checks.push(Check::within(format!("second moment {name} q={q}"), r.second_moment_z, MSE_BAND));
            }
            moments.push(r);
        }
    }

    let (worst, worst_full) = projection_check(&obj, &x, opts.seed)?;
    checks.push(Check::within("projection residual".into(), worst, PROJECTION_TOL));
    checks.push(Check::within("align q=d relative error".into(), worst_full, FULL_TOL));

    for (kind, q) in [
        (EstimatorKind::Avg, 1),
        (EstimatorKind::Avg, 5),
        (EstimatorKind::Align, 5),
        (EstimatorKind::Align, DIM),
    ] {
        let stat = bound_excess(&obj, kind, q, opts)?;
        let th = if kind == EstimatorKind::Align { Theorem::T2 } else { Theorem::T1 };
        checks.push(Check {
            name: format!("bound {} {} q={q}", th.label(), kind_name(kind)),
            statistic: stat,
            band: BOUND_BAND,
            pass: stat <= BOUND_BAND,
        });
    }
    Ok(VerifyReport { checks, moments })
}

/// Worst scaled projection residual over random alignment estimates with
/// `q` cycling through `1..=d`, and worst relative error at `q = d`.
fn projection_check(obj: &QuadraticObjective, x: &DVector<f64>, seed: u64) -> zoq_core::Result<(f64, f64)> {
    let g = obj.gradient(x)?;
    let gn = g.norm();
    let mut rng = SeededRng::new(seed, 3);
    let (mut worst, mut worst_full) = (0.0_f64, 0.0_f64);
    for i in 0..PROJECTION_DRAWS {
        let q = i % DIM + 1;
        let cfg = EstimatorConfig::idealized(EstimatorKind::Align, q);
        let est = estimate(obj, x, &cfg, &mut rng)?;
        let res = projection_residual(&est, &est.block)?;
        // measured derivatives are u^T grad f exactly in idealized mode
        worst = worst.max(res / (1.0 + gn));
        if q == DIM {
            worst_full = worst_full.max((&est.g_hat - &g).norm() / gn);
        }
    }
    Ok((worst, worst_full))
}

/// Largest `(mean gap - bound) / stderr` along the trajectory.
fn bound_excess(obj: &QuadraticObjective, kind: EstimatorKind, q: usize, opts: &VerifyOptions) -> zoq_core::Result<f64> {
    let sched = AllocationSchedule::new(AllocationKind::ConstantQ(q), BOUND_BUDGET);
    let plan = allocation_expand(&sched, DIM)?;
    let policy = if kind == EstimatorKind::Align { StepPolicy::AlignOptimal } else { StepPolicy::AvgOptimal };
    let cfg = EstimatorConfig::idealized(kind, q);
    let (_, fs) = obj.optimum().expect("quadratic has a known optimum");
    let starts = SeededRng::new(opts.seed, 4);
    let dirs = SeededRng::new(opts.seed, 5);

    let runs: Vec<zoq_core::Result<(f64, Vec<f64>)>> = (0..opts.replications)
        .into_par_iter()
        .map(|r| {
            let mut s = starts.derive(r as u64);
            let x0 = DVector::from_iterator(DIM, (0..DIM).map(|_| s.normal()));
            let mut rng = dirs.derive(r as u64);
            let tr = run_deterministic(obj, &cfg, &sched, &policy, &x0, &mut rng)?;
            let gaps = tr.rows.iter().map(|row| row.gap.expect("optimum known")).collect();
            Ok((obj.value(&x0)? - fs, gaps))
        })
        .collect();
    let mut gap0 = Moments::default();
    let mut per_t: Vec<Moments> = vec![Moments::default(); plan.len() + 1];
    for run in runs {
        let (g0, gaps) = run?;
        gap0.push(g0);
        for (m, v) in per_t.iter_mut().zip(gaps) {
            m.push(v);
        }
    }
    let mut inputs = BoundInputs::new(DIM, obj.smoothness());
    inputs.strong_convexity = obj.strong_convexity();
    inputs.gap0 = Some(gap0.mean());
    let th = if kind == EstimatorKind::Align { Theorem::T2 } else { Theorem::T1 };
    let curve = bound_curve(th, &inputs, &plan)?;
    let mut worst = f64::NEG_INFINITY;
    // t = 0 matches the bound by construction
    for (t, m) in per_t.iter().enumerate().skip(1) {
        if let Some(b) = curve.at(t) {
            worst = worst.max(z_score(m.mean(), b, m.stderr(), rounding_floor(b.abs())));
        }
    }
    Ok(worst)
}
