//! Turning an optimal solution into capacities, dispatch and a cost
//! breakdown.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use geolith_lp::{LpSolution, VarId};

use super::build::{BuiltModel, UNSERVED_PENALTY};
use super::EsomError;
use crate::dle::{self, LithiumOutput};
use crate::geothermal::DepthOption;

/// Annual cost of one component (€/a). Revenues are negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostItem {
    pub component: String,
    pub capex_annuity: f64,
    pub fixed_opex: f64,
    pub variable_opex: f64,
    pub revenue: f64,
}

impl CostItem {
    fn new(component: impl Into<String>) -> Self {
        Self {
            component: component.into(),
            capex_annuity: 0.0,
            fixed_opex: 0.0,
            variable_opex: 0.0,
            revenue: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.capex_annuity + self.fixed_opex + self.variable_opex + self.revenue
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeothermalSummary {
    pub depth: f64,
    pub wellhead_temperature: f64,
    pub max_thermal_power: f64,
    /// kW_el
    pub orc_capacity: f64,
    /// kW_th
    pub dhp_capacity: f64,
    /// kWh_el per year
    pub orc_generation: f64,
    /// kWh_th per year
    pub dhp_generation: f64,
    /// Built fraction of the lithium plant.
    pub dle_build: f64,
    /// Weighted mean brine utilization.
    pub brine_utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedSystem {
    pub municipality: String,
    pub scenario: String,
    pub dle_enabled: bool,
    /// Total installed capacity per component (kW; kWh for storage).
    pub capacities: BTreeMap<String, f64>,
    /// Component → period → segment (kW). Storage appears as
    /// `<name>:discharge` and `<name>:charge`.
    pub dispatch: BTreeMap<String, Vec<Vec<f64>>>,
    /// Storage → period → segment, state of charge at the end of each step
    /// (kWh).
    pub storage_soc: BTreeMap<String, Vec<Vec<f64>>>,
    /// Weighted annual activity per dispatch entry (kWh).
    pub annual_energy: BTreeMap<String, f64>,
    pub breakdown: Vec<CostItem>,
    /// Sum of the breakdown (€/a).
    pub tac: f64,
    /// Linear program objective, without the well costs (€/a).
    pub objective: f64,
    pub lithium: LithiumOutput,
    pub depth: Option<DepthOption>,
    pub geothermal: Option<GeothermalSummary>,
}

impl SolvedSystem {
    pub fn capacity(&self, name: &str) -> f64 {
        self.capacities.get(name).copied().unwrap_or(0.0)
    }

    pub fn has_geothermal(&self) -> bool {
        self.depth.is_some()
    }

    pub fn orc_capacity(&self) -> f64 {
        self.geothermal.as_ref().map_or(0.0, |g| g.orc_capacity)
    }

    pub fn dhp_capacity(&self) -> f64 {
        self.geothermal.as_ref().map_or(0.0, |g| g.dhp_capacity)
    }
}

/// Shape a per-step vector as period → segment.
fn by_period(model: &BuiltModel, v: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
    model.periods.iter().map(|r| r.clone().map(&v).collect()).collect()
}

pub fn account(
    solution: &LpSolution,
    model: &BuiltModel,
    municipality: &str,
    scenario: &str,
    dle_enabled: bool,
) -> Result<SolvedSystem, EsomError> {
    if !solution.is_optimal() {
        return Err(EsomError::NotOptimal {
            stage: "account".into(),
            status: solution.status,
        });
    }
    let x = &solution.primal;
    // Basic values may sit outside their bounds by the feasibility
    // tolerance; reports should not show negative generation.
    let val = |v: VarId| {
        let var = model.lp.var(v);
        x[v.0].clamp(var.lower, var.upper)
    };
    let weighted = |vars: &[VarId]| vars.iter().zip(&model.steps).map(|(v, s)| s.weight * val(*v)).sum::<f64>();

    let mut capacities = BTreeMap::new();
    let mut dispatch = BTreeMap::new();
    let mut storage_soc = BTreeMap::new();
    let mut annual_energy = BTreeMap::new();
    let mut breakdown = Vec::new();

    for tv in &model.techs {
        let spec = &tv.spec;
        let added = tv.expansion.map_or(0.0, val);
        let total = spec.capacity_existing + added;
        capacities.insert(spec.name.clone(), total);
        let mut item = CostItem::new(spec.name.clone());
        if !model.fixed {
            item.capex_annuity = added * spec.capex_per_unit * tv.annuity;
            item.fixed_opex = total * spec.capex_per_unit * spec.fixed_opex_share;
        }
        let energy = weighted(&tv.activity);
        let var_cost = energy * spec.variable_opex;
        if var_cost >= 0.0 {
            item.variable_opex = var_cost;
        } else {
            item.revenue = var_cost;
        }
        let series = by_period(model, |t| val(tv.activity[t]));
        if spec.storage.is_some() {
            dispatch.insert(format!("{}:discharge", spec.name), series);
            dispatch.insert(format!("{}:charge", spec.name), by_period(model, |t| val(tv.charge[t])));
            storage_soc.insert(spec.name.clone(), by_period(model, |t| val(tv.soc[t])));
            annual_energy.insert(format!("{}:discharge", spec.name), energy);
            annual_energy.insert(format!("{}:charge", spec.name), weighted(&tv.charge));
        } else {
            dispatch.insert(spec.name.clone(), series);
            annual_energy.insert(spec.name.clone(), energy);
        }
        breakdown.push(item);
    }

    let mut lithium = LithiumOutput::default();
    let mut geothermal = None;
    let depth = model.geo.as_ref().map(|g| g.option);
    if let Some(g) = &model.geo {
        let orc_cap = val(g.orc_capacity);
        let dhp_cap = val(g.dhp_capacity);
        let mut wells = CostItem::new("geothermal_wells");
        wells.capex_annuity = g.drilling_annuity;
        wells.fixed_opex = g.well_fixed_opex;
        let mut orc = CostItem::new("geothermal_orc");
        let mut dhp = CostItem::new("geothermal_dhp");
        if !model.fixed {
            orc.capex_annuity = orc_cap * g.orc_capex * g.orc_annuity;
            orc.fixed_opex = orc_cap * g.orc_capex * g.orc_fixed_share;
            dhp.capex_annuity = dhp_cap * g.dhp_capex * g.dhp_annuity;
            dhp.fixed_opex = dhp_cap * g.dhp_capex * g.dhp_fixed_share;
        }
        let orc_gen = weighted(&g.orc);
        let dhp_gen: f64 = g.heat.values().map(|v| weighted(v)).sum();
        capacities.insert("geothermal_orc".into(), orc_cap);
        capacities.insert("geothermal_dhp".into(), dhp_cap);
        dispatch.insert("geothermal_orc".into(), by_period(model, |t| val(g.orc[t])));
        dispatch.insert(
            "geothermal_dhp".into(),
            by_period(model, |t| g.heat.values().map(|v| val(v[t])).sum()),
        );
        dispatch.insert("geothermal_brine".into(), by_period(model, |t| val(g.phi[t])));
        annual_energy.insert("geothermal_orc".into(), orc_gen);
        annual_energy.insert("geothermal_dhp".into(), dhp_gen);
        breakdown.extend([wells, orc, dhp]);

        let total_w: f64 = model.steps.iter().map(|s| s.weight).sum();
        let mut dle_build = 0.0;
        if let Some(y) = g.dle_build {
            dle_build = val(y);
            let hours = weighted(&g.dle_output).clamp(0.0, dle::MAX_OPERATING_HOURS);
            let (li_t, carbonate_t) = dle::annualize(g.li_rate, hours)?;
            let mut item = CostItem::new("lithium_carbonate");
            if !model.fixed {
                item.capex_annuity = dle_build * g.dle_capex_annual;
            }
            item.variable_opex = carbonate_t * g.dle_opex_per_tonne;
            item.revenue = -carbonate_t * g.carbonate_price;
            lithium = LithiumOutput {
                li_mass_rate: g.li_rate,
                annual_li: li_t,
                annual_carbonate: carbonate_t,
                revenue: carbonate_t * g.carbonate_price,
                dle_opex: carbonate_t * g.dle_opex_per_tonne,
            };
            dispatch.insert("lithium_extraction".into(), by_period(model, |t| val(g.dle_output[t])));
            breakdown.push(item);
        }
        geothermal = Some(GeothermalSummary {
            depth: g.option.depth,
            wellhead_temperature: g.option.wellhead_temperature,
            max_thermal_power: g.option.max_thermal_power,
            orc_capacity: orc_cap,
            dhp_capacity: dhp_cap,
            orc_generation: orc_gen,
            dhp_generation: dhp_gen,
            dle_build,
            brine_utilization: if total_w > 0.0 { weighted(&g.phi) / total_w } else { 0.0 },
        });
    }

    if !model.unserved.is_empty() {
        let mut item = CostItem::new("unserved_demand");
        item.variable_opex = model.unserved.values().map(|v| weighted(v)).sum::<f64>() * UNSERVED_PENALTY;
        breakdown.push(item);
    }

    let tac = breakdown.iter().map(CostItem::total).sum();
    Ok(SolvedSystem {
        municipality: municipality.to_string(),
        scenario: scenario.to_string(),
        dle_enabled,
        capacities,
        dispatch,
        storage_soc,
        annual_energy,
        breakdown,
        tac,
        objective: solution.objective,
        lithium,
        depth,
        geothermal,
    })
}
