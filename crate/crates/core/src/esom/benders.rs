//! Optimization at full hourly resolution by Benders decomposition.
//!
//! Once capacities are fixed, the days of the year decouple: storage cycles
//! within each day and no constraint spans days. The master problem picks
//! capacities and one cost estimate per day; each day's dispatch is a small
//! linear program whose optimal value and capacity sensitivities give a cut
//! `θ_d >= f_d(x̄) + g_d·(x - x̄)`. The day costs are convex in the
//! capacities, so the cuts are valid everywhere. A box around the best
//! known plan keeps the master bounded and damps the usual oscillation.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use geolith_lp::{Basis, BasisStatus, LpBackend, LpModel, SolveError, Sense, VarId};
use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::build::{build_model, BuiltModel, CapacityPlan, ModelInput, ModelMode, VarTag};
use super::grid::TimeGrid;
use super::EsomError;
use crate::geothermal::DepthOption;
use crate::tsagg::{DAYS, HOURS_PER_DAY};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BendersOptions {
    /// Stop once the relative gap between the best plan and the master's
    /// lower bound falls below this.
    pub rel_gap: f64,
    pub max_iterations: usize,
    /// Cost of a kWh of demand left unserved. High enough that buying
    /// capacity is always cheaper, so the optimum serves all demand.
    pub unserved_penalty: f64,
    /// Initial half-width of the box, relative to each capacity's scale.
    pub initial_radius: f64,
    /// Days of the year to model; all of them by default.
    pub days: Option<std::ops::Range<usize>>,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-4,
            max_iterations: 200,
            unserved_penalty: 1000.0,
            initial_radius: 0.5,
            days: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullResolutionResult {
    /// TAC of the best plan at hourly resolution (€/a).
    pub tac: f64,
    /// Proven lower bound on the optimal TAC (€/a).
    pub lower_bound: f64,
    pub converged: bool,
    pub iterations: usize,
    pub subproblem_solves: usize,
    /// Total capacity per component, named as in [`super::SolvedSystem`].
    pub capacities: BTreeMap<String, f64>,
    pub dle_build: f64,
    /// Demand left unserved by the best plan (kWh/a).
    pub unserved_energy: f64,
    pub elapsed: Duration,
}

impl FullResolutionResult {
    pub fn gap(&self) -> f64 {
        (self.tac - self.lower_bound) / self.tac.abs().max(1.0)
    }
}

/// Identifies a capacity variable independently of the model it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CapKey {
    Expansion(usize),
    Orc,
    Dhp,
    Dle,
}

fn cap_key(tag: VarTag) -> Option<CapKey> {
    match tag {
        VarTag::Expansion { tech } => Some(CapKey::Expansion(tech)),
        VarTag::OrcCapacity => Some(CapKey::Orc),
        VarTag::DhpCapacity => Some(CapKey::Dhp),
        VarTag::DleBuild => Some(CapKey::Dle),
        _ => None,
    }
}

struct CapVar {
    key: CapKey,
    name: String,
    lower: f64,
    upper: f64,
    /// €/a per unit.
    cost: f64,
    /// Magnitude used to size the box.
    scale: f64,
}

struct Day {
    model: BuiltModel,
    /// Column of each capacity in this day's model, aligned with the master.
    caps: Vec<Option<VarId>>,
    /// Entries `(row, coefficient)` of each capacity column.
    columns: Vec<Vec<(usize, f64)>>,
    warm: Option<Basis>,
}

struct DayValue {
    cost: f64,
    grad: Vec<f64>,
    unserved: f64,
}

/// Total capacities per component from a plan.
pub fn plan_capacities(input: &ModelInput, plan: &CapacityPlan, with_geothermal: bool) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = input
        .municipality
        .technologies()
        .iter()
        .map(|t| (t.name.clone(), t.capacity_existing + plan.expansion.get(&t.name).copied().unwrap_or(0.0)))
        .collect();
    if with_geothermal {
        out.insert("geothermal_orc".into(), plan.orc);
        out.insert("geothermal_dhp".into(), plan.dhp);
    }
    out
}

/// Capacity plan that reproduces the capacities of a solved system.
pub fn plan_from_capacities(input: &ModelInput, capacities: &BTreeMap<String, f64>, dle_build: f64) -> CapacityPlan {
    let expansion = input
        .municipality
        .technologies()
        .iter()
        .map(|t| {
            let total = capacities.get(&t.name).copied().unwrap_or(t.capacity_existing);
            (t.name.clone(), (total - t.capacity_existing).max(0.0))
        })
        .collect();
    CapacityPlan {
        expansion,
        orc: capacities.get("geothermal_orc").copied().unwrap_or(0.0),
        dhp: capacities.get("geothermal_dhp").copied().unwrap_or(0.0),
        dle_build,
    }
}

/// Optimizes capacities and hourly dispatch of every day of the year at a
/// fixed geothermal depth, starting from `start`. The grid of `input` is
/// ignored; the municipality's raw hourly series are used.
pub fn solve_full_resolution(
    input: &ModelInput,
    depth: Option<&DepthOption>,
    start: &CapacityPlan,
    backend: &dyn LpBackend,
    opts: &BendersOptions,
) -> Result<FullResolutionResult, EsomError> {
    let clock = Instant::now();
    let days = opts.days.clone().unwrap_or(0..DAYS);
    if days.is_empty() || days.end > DAYS {
        return Err(EsomError::Unsupported(format!("day range {days:?} outside the year")));
    }
    let depth = depth.filter(|o| o.max_thermal_power > 0.0);

    // costs, bounds and the constant part come from an investment model
    let probe_grid = TimeGrid::hourly(input.municipality, days.start..days.start + 1);
    let probe_input = ModelInput { grid: &probe_grid, ..*input };
    let probe = build_model(&probe_input, depth, ModelMode::Invest)?;
    let mut constant = probe.lp.objective_offset;
    if let Some(g) = &probe.geo {
        constant += g.drilling_annuity + g.well_fixed_opex;
    }
    let peak = peak_demand(input.municipality, &days);
    let mut caps: Vec<CapVar> = Vec::new();
    for (j, tag) in probe.tags.iter().enumerate() {
        let Some(key) = cap_key(*tag) else { continue };
        let v = probe.lp.var(VarId(j));
        let scale = match key {
            CapKey::Dle => 1.0,
            CapKey::Expansion(t) if probe.techs[t].spec.storage.is_some() => 4.0 * peak,
            _ => peak,
        };
        caps.push(CapVar {
            key,
            name: v.name.clone(),
            lower: v.lower,
            upper: v.upper,
            cost: v.cost,
            scale,
        });
    }
    let point_of = |plan: &CapacityPlan| -> Vec<f64> {
        caps.iter()
            .map(|c| {
                let v = match c.key {
                    CapKey::Expansion(t) => plan.expansion.get(&probe.techs[t].spec.name).copied().unwrap_or(0.0),
                    CapKey::Orc => plan.orc,
                    CapKey::Dhp => plan.dhp,
                    CapKey::Dle => plan.dle_build,
                };
                v.clamp(c.lower, c.upper)
            })
            .collect()
    };
    let plan_of = |x: &[f64]| -> CapacityPlan {
        let mut plan = CapacityPlan::default();
        for (c, &v) in caps.iter().zip(x) {
            match c.key {
                CapKey::Expansion(t) => {
                    plan.expansion.insert(probe.techs[t].spec.name.clone(), v);
                }
                CapKey::Orc => plan.orc = v,
                CapKey::Dhp => plan.dhp = v,
                CapKey::Dle => plan.dle_build = v,
            }
        }
        plan
    };
    let capex = |x: &[f64]| caps.iter().zip(x).map(|(c, v)| c.cost * v).sum::<f64>();

    let mut x_best = point_of(start);
    let start_plan = plan_of(&x_best);
    let mut subs = Vec::with_capacity(days.len());
    for d in days.clone() {
        let grid = TimeGrid::hourly(input.municipality, d..d + 1);
        let day_input = ModelInput { grid: &grid, ..*input };
        let mut model = build_model(&day_input, depth, ModelMode::Fixed(&start_plan))?;
        for vars in model.unserved.values() {
            for v in vars {
                model.lp.set_cost(*v, opts.unserved_penalty);
            }
        }
        let mut index = BTreeMap::new();
        for (j, tag) in model.tags.iter().enumerate() {
            if let Some(k) = cap_key(*tag) {
                index.insert(k, VarId(j));
            }
        }
        let caps_here: Vec<Option<VarId>> = caps.iter().map(|c| index.get(&c.key).copied()).collect();
        let mut columns = vec![Vec::new(); caps.len()];
        for &(i, j, a) in model.lp.triplets() {
            if let Some(k) = caps_here.iter().position(|c| *c == Some(VarId(j))) {
                columns[k].push((i, a));
            }
        }
        subs.push(Day {
            model,
            caps: caps_here,
            columns,
            warm: None,
        });
    }

    let mut solves = 0usize;
    let mut evaluate = |subs: &mut [Day], x: &[f64]| -> Result<Vec<DayValue>, EsomError> {
        let mut out = Vec::with_capacity(subs.len());
        for (i, day) in subs.iter_mut().enumerate() {
            for (c, &v) in day.caps.iter().zip(x) {
                if let Some(var) = c {
                    day.model.lp.set_bounds(*var, v, v);
                }
            }
            solves += 1;
            let sol = match backend.solve(&day.model.lp, day.warm.as_ref()) {
                Err(SolveError::BasisMismatch { .. }) => backend.solve(&day.model.lp, None)?,
                other => other?,
            };
            if !sol.is_optimal() {
                return Err(EsomError::NotOptimal {
                    stage: format!("full resolution, day {}", days.start + i),
                    status: sol.status,
                });
            }
            let duals = sol.duals.as_deref().unwrap_or(&[]);
            // reduced cost c_j - Σ a_ij y_i of each pinned capacity
            let grad = day
                .caps
                .iter()
                .zip(&day.columns)
                .map(|(c, col)| {
                    c.map_or(0.0, |var| {
                        day.model.lp.var(var).cost - col.iter().map(|(i, a)| a * duals[*i]).sum::<f64>()
                    })
                })
                .collect();
            let unserved = day.model.unserved.values().flatten().map(|v| sol.primal[v.0]).sum();
            day.warm = sol.basis;
            out.push(DayValue {
                cost: sol.objective,
                grad,
                unserved,
            });
        }
        Ok(out)
    };

    let n_days = subs.len();
    let mut master = LpModel::new("benders_master");
    let cap_vars: Vec<VarId> = caps.iter().map(|c| master.add_var(c.name.clone(), c.lower, c.upper, c.cost)).collect();
    let theta: Vec<VarId> = (0..n_days)
        .map(|d| master.add_var(format!("theta_{d}"), f64::NEG_INFINITY, f64::INFINITY, 1.0))
        .collect();
    master.objective_offset = constant;
    let mut master_basis: Option<Basis> = None;
    let add_cuts = |master: &mut LpModel, values: &[DayValue], x: &[f64], theta_at: Option<&[f64]>| -> usize {
        let mut added = 0;
        for (d, v) in values.iter().enumerate() {
            let rhs = v.cost - v.grad.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>();
            if let Some(t) = theta_at {
                let tol = 1e-7 * v.cost.abs().max(1.0);
                if t[d] >= v.cost - tol {
                    continue;
                }
            }
            let mut terms = vec![(theta[d], 1.0)];
            terms.extend(cap_vars.iter().zip(&v.grad).filter(|(_, g)| **g != 0.0).map(|(c, g)| (*c, -g)));
            master.add_constraint(format!("cut_{d}_{}", master.num_rows()), terms, Sense::Ge, rhs);
            added += 1;
        }
        added
    };

    let values = evaluate(&mut subs, &x_best)?;
    let total = |values: &[DayValue], x: &[f64]| constant + capex(x) + values.iter().map(|v| v.cost).sum::<f64>();
    let mut f_best = total(&values, &x_best);
    let mut unserved_best: f64 = values.iter().map(|v| v.unserved).sum();
    add_cuts(&mut master, &values, &x_best, None);
    info!("full resolution: start plan costs {f_best:.0} €/a over {n_days} days");

    let mut radius = opts.initial_radius;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut binding = false;
        for (k, c) in caps.iter().enumerate() {
            let half = radius * c.scale.max(x_best[k].abs());
            let lo = (x_best[k] - half).max(c.lower);
            let hi = (x_best[k] + half).min(c.upper);
            master.set_bounds(cap_vars[k], lo, hi);
        }
        let warm = master_basis.as_ref().map(|b| extend_basis(b, master.num_rows()));
        let sol = match backend.solve(&master, warm.as_ref()) {
            Err(SolveError::BasisMismatch { .. }) => backend.solve(&master, None)?,
            other => other?,
        };
        if !sol.is_optimal() {
            return Err(EsomError::NotOptimal {
                stage: "full resolution master".into(),
                status: sol.status,
            });
        }
        master_basis = sol.basis.clone();
        let x: Vec<f64> = cap_vars.iter().map(|v| sol.primal[v.0]).collect();
        let th: Vec<f64> = theta.iter().map(|v| sol.primal[v.0]).collect();
        for (k, c) in caps.iter().enumerate() {
            let half = radius * c.scale.max(x_best[k].abs());
            let at_edge = |b: f64, hard: f64| b != hard && (x[k] - b).abs() <= 1e-9 * c.scale.max(1.0);
            if at_edge(x_best[k] - half, c.lower) && x_best[k] - half > c.lower
                || at_edge(x_best[k] + half, c.upper) && x_best[k] + half < c.upper
            {
                binding = true;
            }
        }
        let predicted = sol.objective;
        if !binding {
            lower_bound = lower_bound.max(predicted);
        }
        let gap = (f_best - predicted) / f_best.abs().max(1.0);
        debug!(
            "full resolution iteration {iterations}: best {f_best:.0}, model {predicted:.0}, radius {radius:.3}, box binding {binding}"
        );
        if gap <= opts.rel_gap {
            if !binding {
                converged = true;
                break;
            }
            // the box hides the rest of the domain; look further out
            radius *= 4.0;
            continue;
        }
        let values = evaluate(&mut subs, &x)?;
        let f = total(&values, &x);
        let added = add_cuts(&mut master, &values, &x, Some(&th));
        let ratio = (f_best - f) / (f_best - predicted);
        if f < f_best {
            f_best = f;
            unserved_best = values.iter().map(|v| v.unserved).sum();
            x_best = x;
            if ratio > 0.5 && binding {
                radius *= 2.0;
            }
        } else if ratio < 0.0 {
            radius *= 0.5;
        }
        if added == 0 && !binding {
            // the model is exact at its own minimizer
            lower_bound = lower_bound.max(predicted);
            converged = true;
            break;
        }
    }

    let plan = plan_of(&x_best);
    Ok(FullResolutionResult {
        tac: f_best,
        lower_bound: lower_bound.min(f_best),
        converged,
        iterations,
        subproblem_solves: solves,
        capacities: plan_capacities(input, &plan, depth.is_some()),
        dle_build: plan.dle_build,
        unserved_energy: unserved_best,
        elapsed: clock.elapsed(),
    })
}

/// Appends basic slacks for rows added since the basis was taken.
fn extend_basis(b: &Basis, rows: usize) -> Basis {
    let mut out = b.clone();
    out.rows.resize(rows, BasisStatus::Basic);
    out
}

/// Largest total demand over all commodities in any hour of `days` (kW).
fn peak_demand(muni: &crate::domain::Municipality, days: &std::ops::Range<usize>) -> f64 {
    let hours = days.start * HOURS_PER_DAY..days.end * HOURS_PER_DAY;
    let mut peak: f64 = 0.0;
    for h in hours {
        let s: f64 = muni.demand.values().map(|ts| ts.values()[h]).sum();
        peak = peak.max(s);
    }
    peak.max(1.0)
}
