use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoqError};
use crate::estimators::EstimatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    /// `eta_t = q_t / (L (q_t + d + 1))`
    AvgOptimal,
    /// `eta_t = 1 / L`
    AlignOptimal,
    /// `eta_t = eta0 / sqrt(t + 1)`
    DiminishingSqrt { eta0: f64 },
}

impl StepPolicy {
    pub fn eta(&self, t: usize, q_t: usize, dim: usize, l: f64) -> f64 {
        match *self {
            StepPolicy::AvgOptimal => q_t as f64 / (l * (q_t + dim + 1) as f64),
            StepPolicy::AlignOptimal => 1.0 / l,
            StepPolicy::DiminishingSqrt { eta0 } => eta0 / ((t + 1) as f64).sqrt(),
        }
    }

    /// Optimal-step policies are tied to their estimator.
    pub fn check_compatible(&self, kind: EstimatorKind) -> Result<()> {
        let ok = match self {
            StepPolicy::AvgOptimal => matches!(kind, EstimatorKind::Avg | EstimatorKind::Single),
            StepPolicy::AlignOptimal => kind == EstimatorKind::Align,
            StepPolicy::DiminishingSqrt { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(ZoqError::Configuration(format!(
                "step policy {self:?} does not apply to the {} estimator",
                kind.label()
            )))
        }
    }

    pub fn label(&self) -> String {
        match self {
            StepPolicy::AvgOptimal => "avg-optimal".into(),
            StepPolicy::AlignOptimal => "align-optimal".into(),
            StepPolicy::DiminishingSqrt { eta0 } => format!("diminishing({eta0})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let l = 4.0;
        assert_eq!(StepPolicy::AvgOptimal.eta(7, 3, 10, l), 3.0 / (4.0 * 14.0));
        assert_eq!(StepPolicy::AlignOptimal.eta(7, 3, 10, l), 0.25);
        let p = StepPolicy::DiminishingSqrt { eta0: 0.5 };
        assert_eq!(p.eta(0, 1, 10, l), 0.5);
        assert_eq!(p.eta(3, 1, 10, l), 0.25);
    }

    #[test]
    fn compatibility() {
        assert!(StepPolicy::AvgOptimal.check_compatible(EstimatorKind::Align).is_err());
        assert!(StepPolicy::AlignOptimal.check_compatible(EstimatorKind::Avg).is_err());
        assert!(StepPolicy::AvgOptimal.check_compatible(EstimatorKind::Single).is_ok());
    }
}
