//! Named experiment presets.

use zoq_core::estimators::EstimatorKind;

use crate::config::{ComboSpec, ExperimentConfig, ObjectiveKind, ObjectiveSpec, ScheduleKind};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: [Preset; 5] = [
    Preset { name: "fig1", description: "strongly convex quadratic, Avg and Align at q in {1, 10, d}" },
    Preset { name: "fig1-constrained", description: "quadratic with a budget below the dimension" },
    Preset { name: "fig2", description: "logistic regression, Avg and Align at q in {1, 10, d}" },
    Preset { name: "fig3", description: "Rosenbrock, Avg and Align at q in {1, 10, d}" },
    Preset { name: "fig4", description: "stochastic regularized logistic regression, diminishing steps" },
];

pub const PRESET_SEED: u64 = 20_240_601;

fn combos(qs: &[usize], align_extra: &[usize]) -> Vec<ComboSpec> {
    let mut out = Vec::new();
    for &q in qs {
        out.push(ComboSpec::new(EstimatorKind::Avg, ScheduleKind::Constant, Some(q)));
    }
    for &q in qs.iter().chain(align_extra) {
        out.push(ComboSpec::new(EstimatorKind::Align, ScheduleKind::Constant, Some(q)));
    }
    out
}

fn objective(kind: ObjectiveKind, dim: usize) -> ObjectiveSpec {
    ObjectiveSpec {
        kind,
        dim,
        seed: 1,
        eps: None,
        samples: None,
        batch_size: None,
        rho: None,
        reference_iterations: None,
    }
}

fn base(name: &str, obj: ObjectiveSpec, budget: usize, combos: Vec<ComboSpec>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed: PRESET_SEED,
        replications: 10,
        budgets: vec![budget],
        output_dir: None,
        start: None,
        objective: obj,
        combos,
    }
}

/// Desk scale uses d = 100 (d = 600 for the constrained quadratic, d = 50
/// for the stochastic problem); the large presets use d = 1000.
pub fn preset(name: &str, paper_scale: bool) -> Option<ExperimentConfig> {
    let d = if paper_scale { 1000 } else { 100 };
    let k = if paper_scale { 20_000 } else { 2000 };
    Some(match name {
        "fig1" => base(name, objective(ObjectiveKind::Quadratic, d), k, combos(&[1, 10, d], &[])),
        "fig1-constrained" => {
            let d = if paper_scale { 1000 } else { 600 };
            base(name, objective(ObjectiveKind::Quadratic, d), 500, combos(&[1, 10, 100], &[500]))
        }
        "fig2" => base(name, objective(ObjectiveKind::Logistic, d), k, combos(&[1, 10, d], &[])),
        "fig3" => base(name, objective(ObjectiveKind::Rosenbrock, d), k, combos(&[1, 10, d], &[])),
        "fig4" => {
            let d = if paper_scale { 1000 } else { 50 };
            let k = if paper_scale { 20_000 } else { 5000 };
            base(name, objective(ObjectiveKind::StochasticLogistic, d), k, combos(&[1, 10, d], &[]))
        }
        _ => return None,
    })
}
