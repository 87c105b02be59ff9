//! Capacity expansion and dispatch model of one municipal energy system.
//!
//! The model minimizes total annual cost (TAC): annualized investment plus
//! fixed and variable operating cost, with revenues entering as negative
//! cost. Geothermal depth is not a model variable; each candidate depth is a
//! separate linear program and [`sweep`] selects among them.

mod account;
mod benders;
mod build;
mod grid;
mod sweep;

use thiserror::Error;

use geolith_lp::{SolveError, Status};

use crate::dle::DleError;
use crate::domain::{CoreError, Commodity};
use crate::geothermal::GeoError;
use crate::tsagg::TsaggError;

pub use account::{account, CostItem, GeothermalSummary, SolvedSystem};
pub use benders::{plan_capacities, plan_from_capacities, solve_full_resolution, BendersOptions, FullResolutionResult};
pub use build::{build_model, BuiltModel, CapacityPlan, GeoPlant, ModelInput, ModelMode, VarTag};
pub use grid::{aggregation_attributes, Step, TimeGrid};
pub use sweep::{optimize_with_geothermal, DepthEvaluation, SweepMode, SweepOptions, SweepOutcome};

/// Below this interest rate the annuity uses its zero-interest limit.
const ZERO_INTEREST: f64 = 1e-9;

/// Capital recovery factor `i(1+i)^n / ((1+i)^n - 1)`, `1/n` as `i → 0`.
pub fn annuity_factor(interest: f64, lifetime: f64) -> f64 {
    if interest < ZERO_INTEREST {
        return 1.0 / lifetime;
    }
    let g = (1.0 + interest).powf(lifetime);
    interest * g / (g - 1.0)
}

#[derive(Debug, Error)]
pub enum EsomError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Tsagg(#[from] TsaggError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Dle(#[from] DleError),
    #[error("solver failure: {0}")]
    Solver(#[from] SolveError),
    #[error("demand for {commodity} cannot be supplied by any available technology")]
    InfeasibleByConstruction { commodity: Commodity },
    #[error("{stage}: model is {status:?}")]
    NotOptimal { stage: String, status: Status },
    #[error("missing series `{0}` in the time grid")]
    MissingSeries(String),
    #[error("{0}")]
    Unsupported(String),
}

impl EsomError {
    /// True when the model has no feasible point, as opposed to a solver or
    /// input failure.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            EsomError::InfeasibleByConstruction { .. }
                | EsomError::NotOptimal {
                    status: Status::Infeasible,
                    ..
                }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annuity_values() {
        assert_eq!(annuity_factor(0.0, 20.0), 0.05);
        assert!((annuity_factor(0.05, 20.0) - 0.080243).abs() < 1e-6);
        assert!((annuity_factor(0.08, 25.0) - 0.093679).abs() < 1e-6);
        assert!((annuity_factor(1e-10, 10.0) - 0.1).abs() < 1e-12);
    }
}
