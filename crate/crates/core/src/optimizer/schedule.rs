use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoqError};

/// How the query budget is split into per-iteration blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationKind {
    ConstantQ(usize),
    SingleQuery,
    /// `q_t = d` until the budget runs out.
    FullSubspace,
    Custom(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationSchedule {
    pub kind: AllocationKind,
    pub budget: usize,
}

impl AllocationSchedule {
    pub fn new(kind: AllocationKind, budget: usize) -> Self {
        Self { kind, budget }
    }

    /// Block size of the first iteration.
    pub fn nominal_q(&self, dim: usize) -> usize {
        match &self.kind {
            AllocationKind::ConstantQ(q) => *q,
            AllocationKind::SingleQuery => 1,
            AllocationKind::FullSubspace => dim,
            AllocationKind::Custom(list) => list.first().copied().unwrap_or(0),
        }
    }
}

/// Explicit per-iteration block sizes.
///
/// Fixed-size schedules spend `budget / q` full blocks and, when the budget
/// does not divide evenly, one final block holding the remainder.
pub fn allocation_expand(sched: &AllocationSchedule, dim: usize) -> Result<Vec<usize>> {
    let k = sched.budget;
    let fixed = |q: usize| -> Result<Vec<usize>> {
        if q < 1 || q > dim {
            return Err(ZoqError::Configuration(format!(
                "block size {q} outside [1, {dim}]"
            )));
        }
        let mut out = vec![q; k / q];
        if !k.is_multiple_of(q) {
            out.push(k % q);
        }
        Ok(out)
    };
    match &sched.kind {
        AllocationKind::ConstantQ(q) => fixed(*q),
        AllocationKind::SingleQuery => fixed(1),
        AllocationKind::FullSubspace => fixed(dim),
        AllocationKind::Custom(list) => {
            if let Some((t, q)) = list.iter().enumerate().find(|(_, q)| **q < 1 || **q > dim) {
                return Err(ZoqError::Configuration(format!(
                    "custom schedule entry {t} is {q}, outside [1, {dim}]"
                )));
            }
            let total: usize = list.iter().sum();
            if total > k {
                return Err(ZoqError::Configuration(format!(
                    "custom schedule spends {total} queries, budget is {k}"
                )));
            }
            Ok(list.clone())
        }
    }
}
