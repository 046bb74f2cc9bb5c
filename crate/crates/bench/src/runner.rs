//! Runs every (budget, combo, replication) of a config.
//!
//! Replication `r` uses the same starting point and direction stream in
//! every combo. Work is spread over the rayon pool and gathered in job
//! order, so results do not depend on the number of threads.

use nalgebra::DVector;
use rayon::prelude::*;
use zoq_core::analysis::{bound_curve, BoundCurve, BoundInputs};
use zoq_core::objectives::{RosenbrockObjective, INIT_BOX};
use zoq_core::optimizer::{allocation_expand, run_deterministic, run_stochastic, StepPolicy, Trajectory};
use zoq_core::{SeededRng, StochasticObjective};

use crate::config::{BuiltObjective, ExperimentConfig, StartKind};

const START_STREAM: u64 = 1;
const DIRECTION_STREAM: u64 = 2;

pub struct ReplicationResult {
    pub index: usize,
    pub outcome: Result<Trajectory, String>,
}

pub struct ComboResult {
    pub label: String,
    pub budget: usize,
    pub replications: Vec<ReplicationResult>,
    pub bounds: Vec<BoundCurve>,
    /// Cumulative queries after each iteration of the schedule, from 0.
    pub query_axis: Vec<usize>,
}

impl ComboResult {
    pub fn successes(&self) -> impl Iterator<Item = (usize, &Trajectory)> {
        self.replications
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|t| (r.index, t)))
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &str)> {
        self.replications
            .iter()
            .filter_map(|r| r.outcome.as_ref().err().map(|e| (r.index, e.as_str())))
    }
}

pub struct RunOutput {
    pub name: String,
    pub stochastic: bool,
    pub combos: Vec<ComboResult>,
}

pub fn starting_point(cfg: &ExperimentConfig, dim: usize, replication: usize) -> DVector<f64> {
    let mut rng = SeededRng::new(cfg.seed, START_STREAM).derive(replication as u64);
    match cfg.start.unwrap_or(cfg.objective.default_start()) {
        StartKind::Gaussian => DVector::from_iterator(dim, (0..dim).map(|_| rng.normal())),
        StartKind::Zeros => DVector::zeros(dim),
        StartKind::Standard => RosenbrockObjective::standard_start(dim),
        StartKind::Box => {
            DVector::from_iterator(dim, (0..dim).map(|_| INIT_BOX * (2.0 * rng.uniform() - 1.0)))
        }
    }
}

pub fn direction_rng(cfg: &ExperimentConfig, replication: usize) -> SeededRng {
    SeededRng::new(cfg.seed, DIRECTION_STREAM).derive(replication as u64)
}

/// Runs the experiment. `obj` must come from `cfg.validate`.
pub fn run(cfg: &ExperimentConfig, obj: &BuiltObjective) -> RunOutput {
    let o = obj.as_objective();
    let d = o.dim();
    let l = o.smoothness();
    let stochastic = obj.is_stochastic();

    let mut jobs = Vec::new();
    for &budget in &cfg.budgets {
        for (ci, _) in cfg.combos.iter().enumerate() {
            for rep in 0..cfg.replications {
                jobs.push((budget, ci, rep));
            }
        }
    }
    let outcomes: Vec<Result<Trajectory, String>> = jobs
        .par_iter()
        .map(|&(budget, ci, rep)| {
            let combo = &cfg.combos[ci];
            let sched = combo.allocation(budget)?;
            let policy = combo.policy(stochastic, l)?;
            let est = combo.estimator_config().with_q(sched.nominal_q(d));
            let x0 = starting_point(cfg, d, rep);
            let mut rng = direction_rng(cfg, rep);
            let r = match obj {
                BuiltObjective::Deterministic(b) => {
                    run_deterministic(b.as_ref(), &est, &sched, &policy, &x0, &mut rng)
                }
                BuiltObjective::Stochastic(s) => run_stochastic(s, &est, &sched, &policy, &x0, &mut rng),
            };
            r.map_err(|e| e.to_string())
        })
        .collect();

    let mut outcomes = outcomes.into_iter();
    let mut combos = Vec::new();
    for &budget in &cfg.budgets {
        for combo in &cfg.combos {
            let replications: Vec<ReplicationResult> = (0..cfg.replications)
                .map(|index| ReplicationResult {
                    index,
                    outcome: outcomes.next().expect("one outcome per job"),
                })
                .collect();
            let sched = combo.allocation(budget).expect("validated");
            let plan = allocation_expand(&sched, d).expect("validated");
            let mut query_axis = Vec::with_capacity(plan.len() + 1);
            query_axis.push(0);
            for q in &plan {
                query_axis.push(query_axis.last().unwrap() + q);
            }
            let policy = combo.policy(stochastic, l).expect("validated");
            let bounds = combo_bounds(cfg, obj, combo.theorems(stochastic, o.strong_convexity().is_some(), cfg.objective.is_convex()), &plan, &policy);
            combos.push(ComboResult {
                label: combo.label(),
                budget,
                replications,
                bounds,
                query_axis,
            });
        }
    }
    RunOutput {
        name: cfg.name.clone(),
        stochastic,
        combos,
    }
}

/// Bound curves evaluated at the replication-averaged starting data. Every
/// bound is affine in `(|x0 - x*|^2, f(x0) - f*)`, so this is the bound on
/// the replication-averaged gap.
fn combo_bounds(
    cfg: &ExperimentConfig,
    obj: &BuiltObjective,
    theorems: Vec<zoq_core::analysis::Theorem>,
    plan: &[usize],
    policy: &StepPolicy,
) -> Vec<BoundCurve> {
    use zoq_core::analysis::Theorem;
    let o = obj.as_objective();
    let d = o.dim();
    let n = cfg.replications as f64;
    let starts: Vec<DVector<f64>> = (0..cfg.replications).map(|r| starting_point(cfg, d, r)).collect();
    let mean_of = |f: &dyn Fn(&DVector<f64>) -> Option<f64>| -> Option<f64> {
        let mut s = 0.0;
        for x in &starts {
            s += f(x)?;
        }
        Some(s / n)
    };
    let opt = o.optimum();
    let gap_opt = opt
        .as_ref()
        .and_then(|(_, fs)| mean_of(&|x| o.value(x).ok().map(|v| v - fs)));
    let dist = opt
        .as_ref()
        .and_then(|(xs, _)| mean_of(&|x| Some((x - xs).norm_squared())));
    let gap_lb = o
        .lower_bound()
        .and_then(|lb| mean_of(&|x| o.value(x).ok().map(|v| v - lb)));
    let sigma2 = match obj {
        BuiltObjective::Stochastic(s) => s.sigma2(),
        _ => None,
    };
    let eta0 = match policy {
        StepPolicy::DiminishingSqrt { eta0 } => Some(*eta0),
        _ => None,
    };
    theorems
        .into_iter()
        .filter_map(|th| {
            let inputs = BoundInputs {
                dim: d,
                smoothness: o.smoothness(),
                strong_convexity: o.strong_convexity(),
                gap0: if matches!(th, Theorem::T5 | Theorem::T6) { gap_lb } else { gap_opt },
                dist0_sq: dist,
                sigma2,
                eta0,
            };
            bound_curve(th, &inputs, plan).ok()
        })
        .collect()
}

/// Validates, runs and writes a config into `dir`. Fails with
/// [`BenchError::Run`] when every replication of some combo failed; the
/// files of the other combos are still written.
pub fn run_and_write(
    cfg: &ExperimentConfig,
    text: Option<&str>,
    origin: &str,
    dir: &std::path::Path,
) -> Result<RunOutput, crate::error::BenchError> {
    let obj = cfg.validate(text, origin)?;
    let out = run(cfg, &obj);
    crate::output::write_run(dir, &out)?;
    let mut dead = Vec::new();
    for c in &out.combos {
        for (rep, msg) in c.failures() {
            eprintln!("warning: {} K={} replication {rep}: {msg}", c.label, c.budget);
        }
        if c.successes().next().is_none() {
            let first = c.failures().next().map(|(_, m)| m).unwrap_or("");
            dead.push(format!("{} K={} ({first})", c.label, c.budget));
        }
    }
    if dead.is_empty() {
        Ok(out)
    } else {
        Err(crate::error::BenchError::Run(format!(
            "every replication failed for {}",
            dead.join("; ")
        )))
    }
}
