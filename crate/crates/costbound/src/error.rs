use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One failed validation constraint, reported with the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("projected SOR did not converge at step {step} after {iters} sweeps (last update {last_update:.3e})")]
    PsorDiverged {
        step: usize,
        iters: usize,
        last_update: f64,
    },

    #[error("Picard iteration did not converge at step {step} after {rounds} rounds (last change {last_change:.3e})")]
    PicardDiverged {
        step: usize,
        rounds: usize,
        last_change: f64,
    },

    #[error("pseudo-time march did not reach steady state within {max_steps} steps (last change {last_change:.3e})")]
    SteadyStateDiverged { max_steps: usize, last_change: f64 },

    #[error("frozen iterate not strictly positive at node {node} (value {value:.3e})")]
    NonPositiveFrozen { node: usize, value: f64 },

    #[error("contact set in slice {slice} is not an interval ({defects} misplaced nodes)")]
    NonIntervalContactSet { slice: usize, defects: usize },

    #[error("sell and buy contact sets overlap in slice {slice}")]
    ContactSetsOverlap { slice: usize },

    #[error("boundary extraction requested on the terminal slice")]
    TerminalSlice,

    #[error("field was solved with variant {found}, expected {expected}")]
    VariantMismatch { expected: String, found: String },

    #[error("explicit oracle restricted to coarse grids: {n_space} nodes exceeds the {max}-node guard")]
    OracleGridTooFine { n_space: usize, max: usize },

    #[error("the explicit oracle does not support the stationary variant")]
    OracleUnsupportedVariant,

    #[error("explicit stability bound degenerate ({bound:.3e})")]
    UnstableExplicitStepBound { bound: f64 },

    #[error("boundary shift produces sell >= buy (shift {shift:?})")]
    InvalidShift { shift: (f64, f64) },

    #[error("insolvent path {path} at step {step}: liquidation wealth {wealth:.6e}")]
    Insolvent { path: u64, step: usize, wealth: f64 },

    #[error("field dump is malformed: {0}")]
    MalformedDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
