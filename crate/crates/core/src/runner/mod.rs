//! End-to-end runs: scenarios, with/without lithium comparisons,
//! one-at-a-time sensitivity sweeps, fleet studies and result export.
//!
//! Every failure carries the pipeline stage it happened in and maps onto
//! one of three exit categories: bad input, infeasible model, solver
//! failure.

mod compare;
pub mod config;
pub mod export;
mod fleet;
mod scenario;
mod sensitivity;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::EconomicSettings;
use crate::esom::{EsomError, SweepMode};
use crate::tsagg::Representation;

pub use compare::{compare, CapacityDelta, Comparison};
pub use fleet::{run_fleet, synthetic_fleet, CurvePoint, FleetEntry, FleetOrdering, FleetResult};
pub use scenario::{aggregate_municipality, full_resolution_check, run_scenario, run_scenario_on, ScenarioRun};
pub use sensitivity::{run_sensitivity, SensitivityParameter, SensitivityRow, SensitivitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Load,
    Scenario,
    Aggregation,
    Optimization,
    Comparison,
    Sensitivity,
    Fleet,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Scenario => "scenario",
            Stage::Aggregation => "aggregation",
            Stage::Optimization => "optimization",
            Stage::Comparison => "comparison",
            Stage::Sensitivity => "sensitivity",
            Stage::Fleet => "fleet",
            Stage::Export => "export",
        };
        f.write_str(s)
    }
}

/// Exit categories of the command line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Infeasible,
    Solver,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Validation => 2,
            FailureKind::Infeasible => 3,
            FailureKind::Solver => 4,
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage: {message}")]
pub struct RunError {
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

impl RunError {
    pub fn validation(stage: Stage, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind: FailureKind::Validation,
            message: message.into(),
        }
    }

    pub fn from_esom(stage: Stage, e: EsomError) -> Self {
        let kind = if e.is_infeasible() {
            FailureKind::Infeasible
        } else {
            match e {
                EsomError::Solver(_) | EsomError::NotOptimal { .. } => FailureKind::Solver,
                _ => FailureKind::Validation,
            }
        };
        Self {
            stage,
            kind,
            message: e.to_string(),
        }
    }
}

/// Settings shared by every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub n_periods: usize,
    pub n_segments: usize,
    pub dle_enabled: bool,
    pub representation: Representation,
    /// Attribute whose peak day keeps a period of its own.
    pub pin_peak_of: Option<String>,
    pub econ: EconomicSettings,
    pub sweep_mode: SweepMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            n_periods: 60,
            n_segments: 16,
            dle_enabled: true,
            representation: Representation::default(),
            pin_peak_of: None,
            econ: EconomicSettings::default(),
            sweep_mode: SweepMode::default(),
        }
    }
}
