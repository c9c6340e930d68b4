//! Escalation harness: run a program under an oracle family at increasing
//! scales and report whether the output settles.
//!
//! Agreement over the last `confirmations` scales is evidence, not proof.
//! `steps_max` is the largest step count seen across the schedule, an
//! empirical lower bound on the worst case over all admissible draws.

use serde::Serialize;
use thiserror::Error;

use super::oracle::OracleFamily;
use crate::isa::Program;
use crate::value::Value;
use crate::vm::{self, Limits, Status};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscalationSchedule {
    scales: Vec<u64>,
    confirmations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("schedule has no scales")]
    Empty,
    #[error("scales must be positive and strictly increasing")]
    NotIncreasing,
    #[error("need at least 2 confirmations and no more than the {scales} scales, got {confirmations}")]
    Confirmations { confirmations: usize, scales: usize },
}

impl EscalationSchedule {
    pub fn new(scales: Vec<u64>, confirmations: usize) -> Result<Self, ScheduleError> {
        if scales.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if scales[0] == 0 || scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ScheduleError::NotIncreasing);
        }
        if confirmations < 2 || confirmations > scales.len() {
            return Err(ScheduleError::Confirmations {
                confirmations,
                scales: scales.len(),
            });
        }
        Ok(EscalationSchedule { scales, confirmations })
    }

    pub fn scales(&self) -> &[u64] {
        &self.scales
    }

    pub fn confirmations(&self) -> usize {
        self.confirmations
    }
}

impl Default for EscalationSchedule {
    /// Scales 1 through 6, two confirmations.
    fn default() -> Self {
        EscalationSchedule {
            scales: (1..=6).collect(),
            confirmations: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub scale: u64,
    pub output: Value,
    pub steps: u64,
    pub status: Status,
    pub draws: Vec<Value>,
}

impl Evidence {
    fn hit_resource_limit(&self) -> bool {
        match self.status {
            Status::FuelExhausted => true,
            Status::Fault(code) => code.is_resource(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Stabilized {
        value: Value,
        steps_max: u64,
        /// Smallest scale from which every later output equals `value`.
        first_stable_scale: u64,
        evidence: Vec<Evidence>,
    },
    Unstable {
        evidence: Vec<Evidence>,
    },
    /// A run among the confirming tail ran out of fuel or memory.
    ResourceExceeded {
        evidence: Vec<Evidence>,
    },
}

impl Verdict {
    pub fn evidence(&self) -> &[Evidence] {
        match self {
            Verdict::Stabilized { evidence, .. }
            | Verdict::Unstable { evidence }
            | Verdict::ResourceExceeded { evidence } => evidence,
        }
    }

    pub fn stabilized_value(&self) -> Option<&Value> {
        match self {
            Verdict::Stabilized { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Stabilized { .. } => "stabilized",
            Verdict::Unstable { .. } => "unstable",
            Verdict::ResourceExceeded { .. } => "resource_exceeded",
        }
    }
}

/// Runs `program` on `input` once per scale of `schedule`, with `family`
/// rescaled each time, and judges the tail of the outputs.
pub fn stabilization_check(
    program: &Program,
    input: &Value,
    schedule: &EscalationSchedule,
    family: &OracleFamily,
    limits: &Limits,
) -> Verdict {
    let limits = Limits { trace: false, ..*limits };
    let evidence: Vec<Evidence> = schedule
        .scales
        .iter()
        .map(|&scale| {
            let oracle = family.with_scale(scale);
            let out = vm::run(program, input.clone(), &oracle, &limits);
            Evidence {
                scale,
                output: out.output,
                steps: out.steps,
                status: out.status,
                draws: out.aln_draws,
            }
        })
        .collect();
    judge(evidence, schedule.confirmations)
}

/// Verdict from per-scale evidence ordered by scale.
pub fn judge(evidence: Vec<Evidence>, confirmations: usize) -> Verdict {
    let tail = &evidence[evidence.len().saturating_sub(confirmations)..];
    if tail.iter().any(Evidence::hit_resource_limit) {
        return Verdict::ResourceExceeded { evidence };
    }
    let value = tail[0].output.clone();
    if tail.iter().any(|e| e.output != value) || tail.len() < confirmations {
        return Verdict::Unstable { evidence };
    }
    let first_stable = evidence
        .iter()
        .rposition(|e| e.output != value)
        .map_or(0, |i| i + 1);
    Verdict::Stabilized {
        steps_max: evidence.iter().map(|e| e.steps).max().unwrap_or(0),
        first_stable_scale: evidence[first_stable].scale,
        value,
        evidence,
    }
}
