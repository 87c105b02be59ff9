//! Selection of the drilling depth.
//!
//! Each depth option fixes the wellhead temperature and thereby the brine
//! heat budget, so the inner problem is a plain linear program. The inner
//! cost is non-increasing in temperature (a larger budget only relaxes the
//! cascade row) and the drilling annuity is strictly increasing in depth.
//! For an interval of options `[a, b]` that gives the bound
//! `inner(b) + drill(a)` on every option in it, which drives an exact
//! branch and bound over the sorted options.

use geolith_lp::{Basis, LpBackend, LpSolution, SolveError, Status};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::account::{account, SolvedSystem};
use super::build::{build_model, BuiltModel, ModelInput, ModelMode};
use super::EsomError;
use crate::geothermal::{enumerate_depth_options, DepthOption};

/// Relative objective difference below which two candidates tie.
const TIE_REL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    #[default]
    BranchAndBound,
    /// Solves every option; for verification.
    Exhaustive,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub mode: SweepMode,
    /// Restricts the candidates; all site options when `None`.
    pub candidates: Option<Vec<DepthOption>>,
    /// Skips geothermal entirely.
    pub disable_geothermal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEvaluation {
    pub depth: f64,
    /// Linear program objective at this depth (€/a).
    pub inner_cost: f64,
    /// Inner cost plus drilling annuity (€/a).
    pub total_cost: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub best: SolvedSystem,
    /// TAC of the system without a geothermal plant; infinite when that
    /// system is infeasible.
    pub no_plant_cost: f64,
    pub evaluated: Vec<DepthEvaluation>,
    /// Depths whose solve failed, with the reason.
    pub failures: Vec<(f64, String)>,
    pub lp_solves: usize,
}

struct Evaluated {
    inner: f64,
    model: BuiltModel,
    solution: LpSolution,
}

struct Sweep<'a, 'b> {
    input: &'a ModelInput<'b>,
    backend: &'a dyn LpBackend,
    warm: Option<Basis>,
    lp_solves: usize,
    evaluated: Vec<DepthEvaluation>,
    failures: Vec<(f64, String)>,
}

impl Sweep<'_, '_> {
    fn solve(&mut self, depth: Option<&DepthOption>) -> Result<Evaluated, EsomError> {
        let model = build_model(self.input, depth, ModelMode::Invest)?;
        let warm = if depth.is_some() { self.warm.as_ref() } else { None };
        self.lp_solves += 1;
        let solution = match self.backend.solve(&model.lp, warm) {
            Err(SolveError::BasisMismatch { .. }) => self.backend.solve(&model.lp, None)?,
            other => other?,
        };
        if depth.is_some() {
            if let Some(b) = &solution.basis {
                self.warm = Some(b.clone());
            }
        }
        if !solution.is_optimal() {
            let stage = depth.map_or("no-plant model".to_string(), |d| format!("depth {} m", d.depth));
            return Err(EsomError::NotOptimal {
                stage,
                status: solution.status,
            });
        }
        Ok(Evaluated {
            inner: solution.objective,
            model,
            solution,
        })
    }
}

fn tol(x: f64) -> f64 {
    TIE_REL * x.abs().max(1.0)
}

/// Solves the no-plant system and the depth options, returning the system
/// with the lowest TAC. Ties prefer no plant, then the shallower depth.
pub fn optimize_with_geothermal(
    input: &ModelInput,
    scenario: &str,
    backend: &dyn LpBackend,
    opts: &SweepOptions,
) -> Result<SweepOutcome, EsomError> {
    let mut sw = Sweep {
        input,
        backend,
        warm: None,
        lp_solves: 0,
        evaluated: Vec::new(),
        failures: Vec::new(),
    };
    let muni = &input.municipality.name;
    let mut best: Option<(f64, Option<usize>, Evaluated)> = None;
    let no_plant_cost = match sw.solve(None) {
        Ok(ev) => {
            let c = ev.inner;
            best = Some((c, None, ev));
            c
        }
        Err(e) if e.is_infeasible() => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let options: Vec<DepthOption> = if opts.disable_geothermal {
        Vec::new()
    } else {
        match &opts.candidates {
            Some(c) => c.clone(),
            None => enumerate_depth_options(input.site)?,
        }
    };
    let costs = &input.municipality.catalog.geothermal;
    let annual_share = super::annuity_factor(input.econ.interest_rate, costs.well_lifetime) + costs.well_fixed_opex_share;
    let drill = |o: &DepthOption| o.drilling_cost_total * annual_share;

    // options without brine heat cost drilling and give nothing
    let mut useful: Vec<DepthOption> = options.iter().copied().filter(|o| o.max_thermal_power > 0.0).collect();
    if opts.mode == SweepMode::BranchAndBound {
        // past the temperature cap deeper wells only cost more
        useful.dedup_by(|later, earlier| later.max_thermal_power <= earlier.max_thermal_power);
    }
    for o in options.iter().filter(|o| o.max_thermal_power <= 0.0) {
        sw.evaluated.push(DepthEvaluation {
            depth: o.depth,
            inner_cost: no_plant_cost,
            total_cost: no_plant_cost + drill(o),
        });
    }

    let offer = |best: &mut Option<(f64, Option<usize>, Evaluated)>, idx: usize, ev: Evaluated, total: f64| {
        let better = match best {
            None => true,
            Some((c, inc, _)) => {
                total < *c - tol(*c) || ((total - *c).abs() <= tol(*c) && inc.is_some_and(|j| idx < j))
            }
        };
        if better {
            *best = Some((total, Some(idx), ev));
        }
    };

    let mut inner_at: Vec<Option<f64>> = vec![None; useful.len()];
    let eval_at = |sw: &mut Sweep, best: &mut Option<(f64, Option<usize>, Evaluated)>, i: usize| -> Option<f64> {
        let o = useful[i];
        match sw.solve(Some(&o)) {
            Ok(ev) => {
                let inner = ev.inner;
                let total = inner + drill(&o);
                debug!("{muni}: depth {} m inner {inner:.2} total {total:.2}", o.depth);
                sw.evaluated.push(DepthEvaluation {
                    depth: o.depth,
                    inner_cost: inner,
                    total_cost: total,
                });
                offer(best, i, ev, total);
                Some(inner)
            }
            Err(e) => {
                warn!("{muni}: depth {} m failed: {e}", o.depth);
                sw.failures.push((o.depth, e.to_string()));
                None
            }
        }
    };

    match opts.mode {
        SweepMode::Exhaustive => {
            for i in 0..useful.len() {
                inner_at[i] = eval_at(&mut sw, &mut best, i);
            }
        }
        SweepMode::BranchAndBound if !useful.is_empty() => {
            let last = useful.len() - 1;
            inner_at[last] = eval_at(&mut sw, &mut best, last);
            let mut stack = vec![(0usize, last)];
            while let Some((a, b)) = stack.pop() {
                let lb = inner_at[b].map_or(f64::NEG_INFINITY, |v| v + drill(&useful[a]));
                if let Some((c, inc, _)) = &best {
                    let c = *c;
                    // an interval can only win a tie if it lies above the incumbent
                    let can_tie = inc.is_some_and(|j| a < j);
                    if lb > c + tol(c) || (lb >= c - tol(c) && !can_tie) {
                        continue;
                    }
                }
                if a == b {
                    continue;
                }
                let m = a + (b - a) / 2;
                if inner_at[m].is_none() {
                    inner_at[m] = eval_at(&mut sw, &mut best, m);
                }
                // deeper half first so shallow ties are offered after
                stack.push((a, m));
                stack.push((m + 1, b));
            }
        }
        SweepMode::BranchAndBound => {}
    }

    let (_, _, ev) = best.ok_or(EsomError::NotOptimal {
        stage: format!("{muni}: every candidate"),
        status: Status::Infeasible,
    })?;
    let best = account(&ev.solution, &ev.model, muni, scenario, input.dle_enabled)?;
    sw.evaluated.sort_by(|x, y| x.depth.total_cmp(&y.depth));
    Ok(SweepOutcome {
        best,
        no_plant_cost,
        evaluated: sw.evaluated,
        failures: sw.failures,
        lp_solves: sw.lp_solves,
    })
}
