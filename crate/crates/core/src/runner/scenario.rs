use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use geolith_lp::LpBackend;

use super::{RunError, RunOptions, Stage};
use crate::domain::{Municipality, Scenario};
use crate::esom::{
    aggregation_attributes, optimize_with_geothermal, plan_from_capacities, solve_full_resolution, BendersOptions,
    DepthEvaluation, FullResolutionResult, ModelInput, SolvedSystem, SweepOptions, TimeGrid,
};
use crate::tsagg::{aggregate_with, AggregateOptions, TypicalPeriods};

/// Result of one scenario run with the evidence behind the depth choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub system: SolvedSystem,
    /// TAC without a geothermal plant; `None` when that system is
    /// infeasible.
    pub no_plant_tac: Option<f64>,
    pub depth_evaluations: Vec<DepthEvaluation>,
    pub depth_failures: Vec<(f64, String)>,
    pub aggregation: TypicalPeriods,
    #[serde(skip)]
    pub lp_solves: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

pub fn aggregate_municipality(muni: &Municipality, opts: &RunOptions) -> Result<TypicalPeriods, RunError> {
    let agg = AggregateOptions {
        representation: opts.representation,
        pin_peak_of: opts.pin_peak_of.clone(),
    };
    aggregate_with(&aggregation_attributes(muni), opts.n_periods, opts.n_segments, &agg)
        .map_err(|e| RunError::validation(Stage::Aggregation, e.to_string()))
}

/// Aggregates, sweeps the depth options, solves and accounts.
pub fn run_scenario(
    muni: &Municipality,
    scenario: &Scenario,
    opts: &RunOptions,
    backend: &dyn LpBackend,
) -> Result<ScenarioRun, RunError> {
    let tp = aggregate_municipality(muni, opts)?;
    run_scenario_on(muni, scenario, &tp, opts, backend)
}

/// Like [`run_scenario`] on an aggregation computed beforehand.
pub fn run_scenario_on(
    muni: &Municipality,
    scenario: &Scenario,
    tp: &TypicalPeriods,
    opts: &RunOptions,
    backend: &dyn LpBackend,
) -> Result<ScenarioRun, RunError> {
    let clock = Instant::now();
    muni.validate().map_err(|e| RunError::validation(Stage::Load, e.to_string()))?;
    opts.econ.validate().map_err(|e| RunError::validation(Stage::Load, e.to_string()))?;
    let (site, dle) = scenario
        .apply(&muni.site, &muni.dle)
        .map_err(|e| RunError::validation(Stage::Scenario, format!("`{}`: {e}", scenario.name)))?;
    let grid = TimeGrid::from_aggregation(tp);
    let input = ModelInput {
        municipality: muni,
        site: &site,
        dle: &dle,
        econ: &opts.econ,
        grid: &grid,
        dle_enabled: opts.dle_enabled,
    };
    let sweep = SweepOptions {
        mode: opts.sweep_mode,
        ..Default::default()
    };
    let out = optimize_with_geothermal(&input, &scenario.name, backend, &sweep)
        .map_err(|e| RunError::from_esom(Stage::Optimization, e))?;
    Ok(ScenarioRun {
        system: out.best,
        no_plant_tac: out.no_plant_cost.is_finite().then_some(out.no_plant_cost),
        depth_evaluations: out.evaluated,
        depth_failures: out.failures,
        aggregation: tp.clone(),
        lp_solves: out.lp_solves,
        elapsed: clock.elapsed(),
    })
}

/// Re-optimizes the capacities of `run` on all 8760 hours at the depth the
/// aggregated run chose, starting from its capacities.
pub fn full_resolution_check(
    muni: &Municipality,
    scenario: &Scenario,
    run: &ScenarioRun,
    opts: &RunOptions,
    benders: &BendersOptions,
    backend: &dyn LpBackend,
) -> Result<FullResolutionResult, RunError> {
    let (site, dle) = scenario
        .apply(&muni.site, &muni.dle)
        .map_err(|e| RunError::validation(Stage::Scenario, format!("`{}`: {e}", scenario.name)))?;
    let grid = TimeGrid::from_aggregation(&run.aggregation);
    let input = ModelInput {
        municipality: muni,
        site: &site,
        dle: &dle,
        econ: &opts.econ,
        grid: &grid,
        dle_enabled: run.system.dle_enabled,
    };
    let s = &run.system;
    let plan = plan_from_capacities(&input, &s.capacities, s.geothermal.as_ref().map_or(0.0, |g| g.dle_build));
    solve_full_resolution(&input, s.depth.as_ref(), &plan, backend, benders)
        .map_err(|e| RunError::from_esom(Stage::Optimization, e))
}
