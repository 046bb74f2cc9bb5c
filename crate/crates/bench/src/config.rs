//! Experiment configuration files.
//!
//! ```toml
//! name = "minimal"
//! seed = 7
//! replications = 2
//! budgets = [25]
//!
//! [objective]
//! kind = "quadratic"
//! dim = 5
//! seed = 1
//!
//! [[combo]]
//! estimator = "align"
//! schedule = "constant"
//! q = 5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zoq_core::analysis::Theorem;
use zoq_core::estimators::{EstimatorConfig, EstimatorKind, EstimatorMode, Smoothing};
use zoq_core::objectives::{
    LogisticObjective, QuadraticObjective, RosenbrockObjective, StochasticLogisticObjective,
};
use zoq_core::optimizer::{allocation_expand, AllocationKind, AllocationSchedule, StepPolicy};
use zoq_core::{Objective, SeededRng, WithOptimum};

use crate::error::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    pub budgets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartKind>,
    pub objective: ObjectiveSpec,
    #[serde(rename = "combo")]
    pub combos: Vec<ComboSpec>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// `x0 ~ N(0, I)`, drawn per replication.
    Gaussian,
    Zeros,
    /// `(-1.2, 1, -1.2, ...)`
    Standard,
    /// Uniform on `[-2, 2]^d`, drawn per replication.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Quadratic,
    Logistic,
    Rosenbrock,
    StochasticLogistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Quadratic: `A = M^T M + eps I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Logistic sample count, default `10 d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Gradient steps used to compute the logistic comparison point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_iterations: Option<usize>,
}

pub const DEFAULT_EPS: f64 = 1.0;
pub const DEFAULT_BATCH: usize = 10;
pub const DEFAULT_RHO: f64 = 0.1;
pub const DEFAULT_REFERENCE_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Single,
    Full,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    AvgOptimal,
    AlignOptimal,
    Diminishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComboSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub estimator: EstimatorKind,
    pub schedule: ScheduleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyKind>,
    /// Absolute `eta0` for the diminishing policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0: Option<f64>,
    /// `eta0` as a fraction of `1 / (4 L)`; used when `eta0` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<EstimatorMode>,
    /// Relative smoothing coefficient `c` in `h = c (1 + |x|)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
}

impl ComboSpec {
    pub fn new(estimator: EstimatorKind, schedule: ScheduleKind, q: Option<usize>) -> Self {
        Self {
            label: None,
            estimator,
            schedule,
            q,
            blocks: None,
            policy: None,
            eta0: None,
            eta0_scale: None,
            mode: None,
            smoothing: None,
        }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let sched = match self.schedule {
            ScheduleKind::Constant => format!("q{}", self.q.unwrap_or(0)),
            ScheduleKind::Single => "q1".into(),
            ScheduleKind::Full => "full".into(),
            ScheduleKind::Custom => "custom".into(),
        };
        format!("{}-{sched}", self.estimator.label())
    }

    pub fn allocation(&self, budget: usize) -> Result<AllocationSchedule, String> {
        let kind = match self.schedule {
            ScheduleKind::Constant => {
                AllocationKind::ConstantQ(self.q.ok_or("constant schedule needs `q`")?)
            }
            ScheduleKind::Single => AllocationKind::SingleQuery,
            ScheduleKind::Full => AllocationKind::FullSubspace,
            ScheduleKind::Custom => {
                AllocationKind::Custom(self.blocks.clone().ok_or("custom schedule needs `blocks`")?)
            }
        };
        Ok(AllocationSchedule::new(kind, budget))
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let mode = self.mode.unwrap_or(EstimatorMode::IdealizedOracle);
        let mut cfg = EstimatorConfig::new(self.estimator, self.q.unwrap_or(1), mode);
        if let Some(c) = self.smoothing {
            cfg.smoothing = Smoothing::Relative(c);
        }
        cfg
    }

    pub fn policy(&self, stochastic: bool, l: f64) -> Result<StepPolicy, String> {
        let kind = self.policy.unwrap_or(if stochastic {
            PolicyKind::Diminishing
        } else {
            match self.estimator {
                EstimatorKind::Align => PolicyKind::AlignOptimal,
                _ => PolicyKind::AvgOptimal,
            }
        });
        Ok(match kind {
            PolicyKind::AvgOptimal => StepPolicy::AvgOptimal,
            PolicyKind::AlignOptimal => StepPolicy::AlignOptimal,
            PolicyKind::Diminishing => {
                let eta0 = match (self.eta0, self.eta0_scale) {
                    (Some(e), _) => e,
                    (None, s) => s.unwrap_or(1.0) / (4.0 * l),
                };
                StepPolicy::DiminishingSqrt { eta0 }
            }
        })
    }

    /// Bounds that apply to this combo's estimator and policy.
    pub fn theorems(&self, stochastic: bool, strongly_convex: bool, convex: bool) -> Vec<Theorem> {
        let align = self.estimator == EstimatorKind::Align;
        if !stochastic && self.policy == Some(PolicyKind::Diminishing) {
            // the deterministic guarantees assume the optimal constant steps
            return Vec::new();
        }
        if stochastic {
            return vec![if align { Theorem::T8 } else { Theorem::T7 }];
        }
        let mut out = Vec::new();
        if strongly_convex {
            out.push(if align { Theorem::T2 } else { Theorem::T1 });
        }
        if convex {
            out.push(if align { Theorem::T4 } else { Theorem::T3 });
        }
        out.push(if align { Theorem::T6 } else { Theorem::T5 });
        out
    }
}

/// An objective built from its spec.
pub enum BuiltObjective {
    Deterministic(Box<dyn Objective>),
    Stochastic(StochasticLogisticObjective),
}

impl BuiltObjective {
    pub fn as_objective(&self) -> &dyn Objective {
        match self {
            BuiltObjective::Deterministic(o) => o.as_ref(),
            BuiltObjective::Stochastic(s) => s,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, BuiltObjective::Stochastic(_))
    }
}

impl ObjectiveSpec {
    pub fn build(&self) -> zoq_core::Result<BuiltObjective> {
        let mut rng = SeededRng::new(self.seed, 0);
        let d = self.dim;
        Ok(match self.kind {
            ObjectiveKind::Quadratic => BuiltObjective::Deterministic(Box::new(
                QuadraticObjective::random(d, self.eps.unwrap_or(DEFAULT_EPS), &mut rng)?,
            )),
            ObjectiveKind::Logistic => {
                let inner = LogisticObjective::random(d, self.samples.unwrap_or(10 * d), &mut rng)?;
                let (x_ref, f_ref) = inner
                    .reference_point(self.reference_iterations.unwrap_or(DEFAULT_REFERENCE_ITERATIONS))?;
                BuiltObjective::Deterministic(Box::new(WithOptimum { inner, x_ref, f_ref }))
            }
            ObjectiveKind::Rosenbrock => {
                BuiltObjective::Deterministic(Box::new(RosenbrockObjective::new(d)?))
            }
            ObjectiveKind::StochasticLogistic => {
                BuiltObjective::Stochastic(StochasticLogisticObjective::random(
                    d,
                    self.batch_size.unwrap_or(DEFAULT_BATCH),
                    self.rho.unwrap_or(DEFAULT_RHO),
                    &mut rng,
                )?)
            }
        })
    }

    pub fn default_start(&self) -> StartKind {
        match self.kind {
            ObjectiveKind::Rosenbrock => StartKind::Box,
            _ => StartKind::Gaussian,
        }
    }

    pub fn is_convex(&self) -> bool {
        self.kind != ObjectiveKind::Rosenbrock
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and checks everything that does not need the objective.
    pub fn parse(text: &str, origin: &str) -> Result<Self, BenchError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(format!("{origin}: {e}")))?;
        cfg.check_static(text, origin)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    fn check_static(&self, text: &str, origin: &str) -> Result<(), BenchError> {
        let at = |line: Option<usize>, msg: String| {
            BenchError::Config(match line {
                Some(l) => format!("{origin}:{l}: {msg}"),
                None => format!("{origin}: {msg}"),
            })
        };
        if self.replications < 1 {
            return Err(at(key_line(text, "replications"), "replications must be >= 1".into()));
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return Err(at(key_line(text, "budgets"), "budgets must be a non-empty list of positive integers".into()));
        }
        if self.objective.dim < 1 {
            return Err(at(key_line(text, "dim"), "objective dim must be >= 1".into()));
        }
        if self.combos.is_empty() {
            return Err(at(None, "at least one [[combo]] section is required".into()));
        }
        let lines = combo_lines(text);
        let mut seen = std::collections::HashSet::new();
        for (i, c) in self.combos.iter().enumerate() {
            if !seen.insert(c.label()) {
                return Err(at(lines.get(i).copied(), format!("combo {}: duplicate label `{}`", i + 1, c.label())));
            }
            if c.label().chars().any(|ch| !(ch.is_ascii_alphanumeric() || "-_.".contains(ch))) {
                return Err(at(lines.get(i).copied(), format!("combo {}: label `{}` may only use [A-Za-z0-9-_.]", i + 1, c.label())));
            }
        }
        Ok(())
    }

    /// Builds the objective and checks every combo against the optimizer's
    /// preconditions for every budget before anything runs.
    pub fn validate(&self, text: Option<&str>, origin: &str) -> Result<BuiltObjective, BenchError> {
        let obj = self
            .objective
            .build()
            .map_err(|e| BenchError::Config(format!("{origin}: objective: {e}")))?;
        let o = obj.as_objective();
        let d = o.dim();
        let lines = text.map(combo_lines).unwrap_or_default();
        let start = self.start.unwrap_or(self.objective.default_start());
        if start == StartKind::Standard && self.objective.kind != ObjectiveKind::Rosenbrock {
            return Err(BenchError::Config(format!("{origin}: start `standard` only applies to rosenbrock")));
        }
        for (i, c) in self.combos.iter().enumerate() {
            let loc = match lines.get(i) {
                Some(l) => format!("{origin}:{l}: combo {} ({})", i + 1, c.label()),
                None => format!("{origin}: combo {} ({})", i + 1, c.label()),
            };
            let fail = |m: String| BenchError::Config(format!("{loc}: {m}"));
            let policy = c.policy(obj.is_stochastic(), o.smoothness()).map_err(fail)?;
            policy.check_compatible(c.estimator).map_err(|e| fail(e.to_string()))?;
            if obj.is_stochastic() && !matches!(policy, StepPolicy::DiminishingSqrt { .. }) {
                return Err(fail("stochastic objectives need the diminishing policy".into()));
            }
            if let StepPolicy::DiminishingSqrt { eta0 } = policy {
                if !(eta0 > 0.0 && eta0.is_finite()) {
                    return Err(fail(format!("eta0 must be positive, got {eta0}")));
                }
                if obj.is_stochastic() && eta0 > 1.0 / (4.0 * o.smoothness()) * (1.0 + 1e-12) {
                    return Err(fail(format!(
                        "eta0 = {eta0} must lie in (0, 1/(4L)] with L = {}",
                        o.smoothness()
                    )));
                }
            }
            if c.mode.unwrap_or(EstimatorMode::IdealizedOracle) == EstimatorMode::IdealizedOracle
                && !o.has_gradient()
            {
                return Err(fail("idealized mode needs a gradient oracle".into()));
            }
            for &k in &self.budgets {
                let sched = c.allocation(k).map_err(|m| fail(m.to_string()))?;
                let plan = allocation_expand(&sched, d).map_err(|e| fail(format!("budget {k}: {e}")))?;
                let nominal = sched.nominal_q(d);
                if k < nominal {
                    return Err(fail(format!("budget {k} is smaller than one block of {nominal}")));
                }
                let spent: usize = plan.iter().sum();
                let largest = plan.iter().copied().max().unwrap_or(0);
                if spent + largest <= k {
                    return Err(fail(format!(
                        "budget {k}: custom blocks spend only {spent} queries; leave less than one block unspent"
                    )));
                }
                if c.estimator == EstimatorKind::Single && plan.iter().any(|&q| q != 1) {
                    return Err(fail("single-query estimator needs q = 1".into()));
                }
                c.estimator_config()
                    .with_q(nominal)
                    .validate(d)
                    .map_err(|e| fail(e.to_string()))?;
            }
        }
        Ok(obj)
    }
}

/// 1-based line numbers of each `[[combo]]` header.
fn combo_lines(text: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim().starts_with("[[combo]]"))
        .map(|(i, _)| i + 1)
        .collect()
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}
