//! Assembly of the linear program.
//!
//! Units: activity and capacity in kW (storage energy in kWh), costs in €,
//! step weights in hours per year. The objective is € per year.

use std::collections::{BTreeMap, BTreeSet};

use geolith_lp::{LpModel, RowId, Sense, VarId};

use super::grid::{Step, TimeGrid};
use super::{annuity_factor, EsomError};
use crate::dle;
use crate::domain::{
    Commodity, DleParams, EconomicSettings, GeothermalSiteParams, Municipality, PlantEfficiencies, TechKind,
    TechnologySpec, LI_TO_CARBONATE,
};
use crate::geothermal::DepthOption;

/// Cost of a kWh of demand left unserved in [`ModelMode::Fixed`] models.
pub const UNSERVED_PENALTY: f64 = 10.0;

/// Capacity factors below this are treated as zero.
const MIN_AVAILABILITY: f64 = 1e-9;

pub struct ModelInput<'a> {
    pub municipality: &'a Municipality,
    /// Site with scenario overrides applied.
    pub site: &'a GeothermalSiteParams,
    pub dle: &'a DleParams,
    pub econ: &'a EconomicSettings,
    pub grid: &'a TimeGrid,
    pub dle_enabled: bool,
}

/// Capacities decided outside the model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CapacityPlan {
    /// Added capacity per technology (beyond existing).
    pub expansion: BTreeMap<String, f64>,
    pub orc: f64,
    pub dhp: f64,
    /// Built fraction of the lithium plant in [0, 1].
    pub dle_build: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum ModelMode<'a> {
    /// Capacities are variables carrying their annualized cost.
    Invest,
    /// Capacities are pinned at the plan's values with zero cost, and
    /// unserved demand is allowed at [`UNSERVED_PENALTY`]. The reduced
    /// costs of the pinned variables are the sensitivities of the operating
    /// cost to the plan.
    Fixed(&'a CapacityPlan),
}

/// What a variable stands for. `step` indexes [`BuiltModel::steps`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarTag {
    Expansion { tech: usize },
    Activity { tech: usize, step: usize },
    Charge { tech: usize, step: usize },
    Soc { tech: usize, step: usize },
    BrineUse { step: usize },
    OrcOutput { step: usize },
    GeoHeat { commodity: Commodity, step: usize },
    OrcCapacity,
    DhpCapacity,
    DleBuild,
    DleOutput { step: usize },
    Unserved { commodity: Commodity, step: usize },
}

#[derive(Debug, Clone)]
pub struct TechVars {
    pub spec: TechnologySpec,
    /// Expansion beyond existing capacity, when the technology may grow.
    pub expansion: Option<VarId>,
    /// €/a per unit of capacity: annuity plus fixed operating cost.
    pub annual_cost_per_unit: f64,
    pub annuity: f64,
    /// Activity per step; discharge for storage.
    pub activity: Vec<VarId>,
    pub charge: Vec<VarId>,
    pub soc: Vec<VarId>,
}

#[derive(Debug, Clone)]
pub struct GeoPlant {
    pub option: DepthOption,
    pub efficiencies: PlantEfficiencies,
    pub parasitic_fraction: f64,
    pub phi: Vec<VarId>,
    pub orc: Vec<VarId>,
    /// Heat delivered per commodity per step.
    pub heat: BTreeMap<Commodity, Vec<VarId>>,
    pub orc_capacity: VarId,
    pub dhp_capacity: VarId,
    pub cascade: Vec<RowId>,
    pub orc_annuity: f64,
    pub orc_fixed_share: f64,
    pub orc_capex: f64,
    pub dhp_annuity: f64,
    pub dhp_fixed_share: f64,
    pub dhp_capex: f64,
    pub dle_build: Option<VarId>,
    pub dle_output: Vec<VarId>,
    pub dle_capex_annual: f64,
    /// mg/s at full brine flow.
    pub li_rate: f64,
    /// t Li₂CO₃ per hour at full brine flow.
    pub carbonate_per_hour: f64,
    pub carbonate_price: f64,
    pub dle_opex_per_tonne: f64,
    pub drilling_annuity: f64,
    pub well_fixed_opex: f64,
}

pub struct BuiltModel {
    pub lp: LpModel,
    pub tags: Vec<VarTag>,
    pub steps: Vec<Step>,
    pub periods: Vec<std::ops::Range<usize>>,
    pub techs: Vec<TechVars>,
    pub geo: Option<GeoPlant>,
    pub balance: BTreeMap<Commodity, Vec<RowId>>,
    pub demand: BTreeMap<Commodity, Vec<f64>>,
    /// Unserved demand per commodity (fixed mode only).
    pub unserved: BTreeMap<Commodity, Vec<VarId>>,
    pub fixed: bool,
}

impl BuiltModel {
    /// (technology, commodity, period, segment) behind a variable.
    pub fn describe(&self, var: VarId) -> (Option<&str>, Option<Commodity>, Option<(usize, usize)>) {
        let at = |step: usize| Some((self.steps[step].period, self.steps[step].segment));
        let tech = |t: usize| Some(self.techs[t].spec.name.as_str());
        match self.tags[var.0] {
            VarTag::Expansion { tech: t } => (tech(t), None, None),
            VarTag::Activity { tech: t, step } | VarTag::Charge { tech: t, step } | VarTag::Soc { tech: t, step } => {
                (tech(t), self.techs[t].spec.storage.as_ref().map(|s| s.commodity), at(step))
            }
            VarTag::BrineUse { step } | VarTag::DleOutput { step } => (Some("geothermal"), None, at(step)),
            VarTag::OrcOutput { step } => (Some("geothermal_orc"), Some(Commodity::Electricity), at(step)),
            VarTag::GeoHeat { commodity, step } => (Some("geothermal_dhp"), Some(commodity), at(step)),
            VarTag::OrcCapacity => (Some("geothermal_orc"), None, None),
            VarTag::DhpCapacity => (Some("geothermal_dhp"), None, None),
            VarTag::DleBuild => (Some("lithium_carbonate"), None, None),
            VarTag::Unserved { commodity, step } => (None, Some(commodity), at(step)),
        }
    }
}

struct Builder {
    lp: LpModel,
    tags: Vec<VarTag>,
}

impl Builder {
    fn var(&mut self, name: String, lo: f64, hi: f64, cost: f64, tag: VarTag) -> VarId {
        self.tags.push(tag);
        self.lp.add_var(name, lo, hi, cost)
    }
}

fn availability<'g>(grid: &'g TimeGrid, spec: &TechnologySpec) -> Result<Option<&'g Vec<f64>>, EsomError> {
    match &spec.availability_profile {
        Some(p) => grid
            .availability
            .get(p)
            .map(Some)
            .ok_or_else(|| EsomError::MissingSeries(format!("profile:{p}"))),
        None => Ok(None),
    }
}

/// Geothermal heat may only serve low-temperature commodities.
pub const GEO_HEAT_COMMODITIES: [Commodity; 2] = [Commodity::HeatLow, Commodity::ProcessHeatLow];

/// Rejects models in which some demand has no possible supplier: the
/// supply graph is closed under "technology with capacity whose inputs are
/// all suppliable".
fn check_suppliable(input: &ModelInput, techs: &[TechnologySpec], geo: Option<&DepthOption>) -> Result<(), EsomError> {
    let mut ok: BTreeSet<Commodity> = BTreeSet::from([Commodity::AmbientHeat]);
    if geo.is_some_and(|o| o.max_thermal_power > 0.0) {
        ok.insert(Commodity::Electricity);
        ok.extend(GEO_HEAT_COMMODITIES);
    }
    let usable: Vec<&TechnologySpec> = techs
        .iter()
        .filter(|t| t.kind != TechKind::Storage && t.kind != TechKind::Sink)
        .filter(|t| t.capacity_max_or_inf() > 0.0)
        .filter(|t| match availability(input.grid, t) {
            Ok(Some(a)) => a.iter().any(|v| *v > MIN_AVAILABILITY),
            Ok(None) => true,
            Err(_) => false,
        })
        .filter(|t| t.annual_limit.is_none_or(|l| l > 0.0))
        .collect();
    loop {
        let before = ok.len();
        for t in &usable {
            if t.io.iter().filter(|(_, v)| **v < 0.0).all(|(c, _)| ok.contains(c)) {
                ok.extend(t.io.iter().filter(|(_, v)| **v > 0.0).map(|(c, _)| *c));
            }
        }
        if ok.len() == before {
            break;
        }
    }
    for (c, d) in &input.grid.demand {
        if d.iter().any(|v| *v > 0.0) && !ok.contains(c) {
            return Err(EsomError::InfeasibleByConstruction { commodity: *c });
        }
    }
    Ok(())
}

pub fn build_model(input: &ModelInput, depth: Option<&DepthOption>, mode: ModelMode) -> Result<BuiltModel, EsomError> {
    let grid = input.grid;
    let n = grid.len();
    let techs = input.municipality.technologies();
    let fixed = matches!(mode, ModelMode::Fixed(_));
    if !fixed {
        check_suppliable(input, &techs, depth)?;
    }
    let rate = input.econ.interest_rate;
    let geo_costs = input.municipality.catalog.geothermal;
    let depth = depth.filter(|o| o.max_thermal_power > 0.0);
    let mut b = Builder {
        lp: LpModel::new(format!("{}_esom", input.municipality.name)),
        tags: Vec::new(),
    };

    // commodities that need a balance row
    let mut used: BTreeSet<Commodity> = grid
        .demand
        .iter()
        .filter(|(_, d)| d.iter().any(|v| *v != 0.0))
        .map(|(c, _)| *c)
        .collect();
    for t in &techs {
        used.extend(t.io.keys().copied());
        if let Some(s) = &t.storage {
            used.insert(s.commodity);
        }
    }
    if depth.is_some() {
        used.insert(Commodity::Electricity);
    }
    used.retain(|c| c.is_balanced());

    let mut balance: BTreeMap<Commodity, Vec<RowId>> = BTreeMap::new();
    for c in &used {
        let d = grid.demand.get(c);
        let rows = (0..n)
            .map(|t| b.lp.add_row(format!("bal_{c}_{t}"), Sense::Eq, d.map_or(0.0, |d| d[t])))
            .collect();
        balance.insert(*c, rows);
    }

    let plan = match mode {
        ModelMode::Fixed(p) => Some(p),
        ModelMode::Invest => None,
    };
    let mut tech_vars = Vec::with_capacity(techs.len());
    for (ti, spec) in techs.iter().enumerate() {
        let name = &spec.name;
        let annuity = annuity_factor(rate, spec.economic_lifetime);
        let per_unit = spec.capex_per_unit * (annuity + spec.fixed_opex_share);
        let existing = spec.capacity_existing;
        let room = spec.capacity_max_or_inf() - existing;
        if !fixed {
            b.lp.objective_offset += existing * spec.capex_per_unit * spec.fixed_opex_share;
        }
        let free_capacity = spec.capex_per_unit == 0.0
            && spec.capacity_max.is_none()
            && spec.availability_profile.is_none()
            && spec.kind != TechKind::Storage;
        let expansion = if room > 0.0 && !free_capacity {
            let tag = VarTag::Expansion { tech: ti };
            Some(match plan {
                Some(p) => {
                    let v = p.expansion.get(name).copied().unwrap_or(0.0);
                    b.var(format!("cap_{name}"), v, v, 0.0, tag)
                }
                None => {
                    let lo = (spec.capacity_min - existing).max(0.0);
                    b.var(format!("cap_{name}"), lo, room, per_unit, tag)
                }
            })
        } else {
            None
        };
        let avail = availability(grid, spec)?;
        let mut tv = TechVars {
            spec: spec.clone(),
            expansion,
            annual_cost_per_unit: per_unit,
            annuity,
            activity: Vec::with_capacity(n),
            charge: Vec::new(),
            soc: Vec::new(),
        };
        if let Some(st) = &spec.storage {
            let c = st.commodity;
            for (t, step) in grid.steps.iter().enumerate() {
                let w = step.weight;
                let d = b.var(format!("dis_{name}_{t}"), 0.0, f64::INFINITY, w * spec.variable_opex, VarTag::Activity { tech: ti, step: t });
                let ch = b.var(format!("chg_{name}_{t}"), 0.0, f64::INFINITY, 0.0, VarTag::Charge { tech: ti, step: t });
                let e = b.var(format!("soc_{name}_{t}"), 0.0, f64::INFINITY, 0.0, VarTag::Soc { tech: ti, step: t });
                b.lp.set_coeff(balance[&c][t], d, 1.0);
                b.lp.set_coeff(balance[&c][t], ch, -1.0);
                let limits = [(e, 1.0, "soc"), (d, st.c_rate, "dis"), (ch, st.c_rate, "chg")];
                for (v, k, tag) in limits {
                    match expansion {
                        Some(cap) => {
                            b.lp.add_constraint(format!("lim_{tag}_{name}_{t}"), [(v, 1.0), (cap, -k)], Sense::Le, k * existing);
                        }
                        None => b.lp.set_bounds(v, 0.0, k * existing),
                    }
                }
                tv.activity.push(d);
                tv.charge.push(ch);
                tv.soc.push(e);
            }
            for range in &grid.periods {
                for t in range.clone() {
                    let prev = if t == range.start { range.end - 1 } else { t - 1 };
                    let dur = grid.steps[t].duration;
                    let keep = (1.0 - st.self_discharge).powf(dur);
                    let row = b.lp.add_row(format!("soc_{name}_{t}"), Sense::Eq, 0.0);
                    b.lp.set_coeff(row, tv.soc[t], 1.0);
                    b.lp.set_coeff(row, tv.soc[prev], -keep);
                    b.lp.set_coeff(row, tv.charge[t], -dur * st.charge_efficiency);
                    b.lp.set_coeff(row, tv.activity[t], dur / st.discharge_efficiency);
                }
            }
        } else {
            for (t, step) in grid.steps.iter().enumerate() {
                let a = avail.map_or(1.0, |a| a[t]);
                let a = if a < MIN_AVAILABILITY { 0.0 } else { a };
                let ub = if free_capacity {
                    f64::INFINITY
                } else if expansion.is_some() && a > 0.0 {
                    f64::INFINITY
                } else {
                    a * existing
                };
                let x = b.var(format!("act_{name}_{t}"), 0.0, ub, step.weight * spec.variable_opex, VarTag::Activity { tech: ti, step: t });
                if let (Some(cap), true) = (expansion, a > 0.0) {
                    b.lp.add_constraint(format!("lim_{name}_{t}"), [(x, 1.0), (cap, -a)], Sense::Le, a * existing);
                }
                for (c, k) in &spec.io {
                    if let Some(rows) = balance.get(c) {
                        b.lp.set_coeff(rows[t], x, *k);
                    }
                }
                tv.activity.push(x);
            }
            if let Some(limit) = spec.annual_limit {
                if fixed {
                    return Err(EsomError::Unsupported(format!(
                        "annual limit of `{name}` couples time steps of a fixed-capacity model"
                    )));
                }
                let terms: Vec<(VarId, f64)> = tv.activity.iter().zip(&grid.steps).map(|(x, s)| (*x, s.weight)).collect();
                b.lp.add_constraint(format!("annual_{name}"), terms, Sense::Le, limit);
            }
        }
        tech_vars.push(tv);
    }

    let geo = match depth {
        Some(option) => Some(add_geothermal(&mut b, input, option, &balance, plan, rate, &geo_costs)?),
        None => None,
    };

    let mut unserved = BTreeMap::new();
    if fixed {
        for (c, rows) in &balance {
            let vars = grid
                .steps
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    let u = b.var(format!("uns_{c}_{t}"), 0.0, f64::INFINITY, s.weight * UNSERVED_PENALTY, VarTag::Unserved { commodity: *c, step: t });
                    b.lp.set_coeff(rows[t], u, 1.0);
                    u
                })
                .collect();
            unserved.insert(*c, vars);
        }
    }

    let demand = used
        .iter()
        .map(|c| (*c, grid.demand.get(c).cloned().unwrap_or_else(|| vec![0.0; n])))
        .collect();
    Ok(BuiltModel {
        lp: b.lp,
        tags: b.tags,
        steps: grid.steps.clone(),
        periods: grid.periods.clone(),
        techs: tech_vars,
        geo,
        balance,
        demand,
        unserved,
        fixed,
    })
}

fn add_geothermal(
    b: &mut Builder,
    input: &ModelInput,
    option: &DepthOption,
    balance: &BTreeMap<Commodity, Vec<RowId>>,
    plan: Option<&CapacityPlan>,
    rate: f64,
    costs: &crate::domain::GeothermalCosts,
) -> Result<GeoPlant, EsomError> {
    let grid = input.grid;
    let site = input.site;
    let eta = site.efficiencies;
    let m = option.max_thermal_power;
    let orc_annuity = annuity_factor(rate, costs.orc.lifetime);
    let dhp_annuity = annuity_factor(rate, costs.dhp.lifetime);
    let orc_cost = costs.orc.capex_per_kw * (orc_annuity + costs.orc.fixed_opex_share);
    let dhp_cost = costs.dhp.capex_per_kw * (dhp_annuity + costs.dhp.fixed_opex_share);
    let (orc_capacity, dhp_capacity) = match plan {
        Some(p) => (
            b.var("cap_geo_orc".into(), p.orc, p.orc, 0.0, VarTag::OrcCapacity),
            b.var("cap_geo_dhp".into(), p.dhp, p.dhp, 0.0, VarTag::DhpCapacity),
        ),
        None => (
            b.var("cap_geo_orc".into(), 0.0, eta.el * m, orc_cost, VarTag::OrcCapacity),
            b.var("cap_geo_dhp".into(), 0.0, eta.th * m, dhp_cost, VarTag::DhpCapacity),
        ),
    };
    let li_rate = dle::lithium_rate(site.flow_rate, site.li_concentration, input.dle.extraction_efficiency)?;
    let carbonate_per_hour = li_rate * 3600.0 * 1e-9 * LI_TO_CARBONATE;
    let dle_annuity = annuity_factor(rate, costs.dle_lifetime);
    let dle_capex_annual = input.dle.capex * dle_annuity;
    let with_dle = input.dle_enabled && li_rate > 0.0;
    let dle_build = with_dle.then(|| match plan {
        Some(p) => b.var("dle_build".into(), p.dle_build, p.dle_build, 0.0, VarTag::DleBuild),
        None => b.var("dle_build".into(), 0.0, 1.0, dle_capex_annual, VarTag::DleBuild),
    });
    let margin = input.dle.carbonate_price - input.dle.opex_per_tonne;
    let heat_targets: Vec<Commodity> = GEO_HEAT_COMMODITIES.into_iter().filter(|c| balance.contains_key(c)).collect();

    let mut g = GeoPlant {
        option: *option,
        efficiencies: eta,
        parasitic_fraction: site.parasitic_fraction,
        phi: Vec::new(),
        orc: Vec::new(),
        heat: heat_targets.iter().map(|c| (*c, Vec::new())).collect(),
        orc_capacity,
        dhp_capacity,
        cascade: Vec::new(),
        orc_annuity,
        orc_fixed_share: costs.orc.fixed_opex_share,
        orc_capex: costs.orc.capex_per_kw,
        dhp_annuity,
        dhp_fixed_share: costs.dhp.fixed_opex_share,
        dhp_capex: costs.dhp.capex_per_kw,
        dle_build,
        dle_output: Vec::new(),
        dle_capex_annual,
        li_rate,
        carbonate_per_hour,
        carbonate_price: input.dle.carbonate_price,
        dle_opex_per_tonne: input.dle.opex_per_tonne,
        drilling_annuity: option.drilling_cost_total * annuity_factor(rate, costs.well_lifetime),
        well_fixed_opex: option.drilling_cost_total * costs.well_fixed_opex_share,
    };
    for (t, step) in grid.steps.iter().enumerate() {
        let phi = b.var(format!("geo_phi_{t}"), 0.0, 1.0, 0.0, VarTag::BrineUse { step: t });
        let e = b.var(format!("geo_orc_{t}"), 0.0, eta.el * m, 0.0, VarTag::OrcOutput { step: t });
        let cascade = b.lp.add_row(format!("geo_cascade_{t}"), Sense::Le, 0.0);
        b.lp.set_coeff(cascade, phi, -m);
        b.lp.set_coeff(cascade, e, 1.0 / eta.el);
        let orc_link = b.lp.add_constraint(format!("geo_orc_lim_{t}"), [(e, 1.0), (orc_capacity, -1.0)], Sense::Le, 0.0);
        let _ = orc_link;
        let el = &balance[&Commodity::Electricity];
        b.lp.set_coeff(el[t], e, 1.0);
        if site.parasitic_fraction > 0.0 {
            b.lp.set_coeff(el[t], phi, -site.parasitic_fraction * m);
        }
        let dhp_link = b.lp.add_row(format!("geo_dhp_lim_{t}"), Sense::Le, 0.0);
        b.lp.set_coeff(dhp_link, dhp_capacity, -1.0);
        for c in &heat_targets {
            let h = b.var(format!("geo_heat_{c}_{t}"), 0.0, eta.th * m, 0.0, VarTag::GeoHeat { commodity: *c, step: t });
            b.lp.set_coeff(cascade, h, 1.0 / eta.th);
            b.lp.set_coeff(dhp_link, h, 1.0);
            b.lp.set_coeff(balance[c][t], h, 1.0);
            g.heat.get_mut(c).expect("heat target").push(h);
        }
        if let Some(y) = dle_build {
            let l = b.var(format!("dle_out_{t}"), 0.0, 1.0, -step.weight * carbonate_per_hour * margin, VarTag::DleOutput { step: t });
            b.lp.add_constraint(format!("dle_brine_{t}"), [(l, 1.0), (phi, -1.0)], Sense::Le, 0.0);
            b.lp.add_constraint(format!("dle_plant_{t}"), [(l, 1.0), (y, -1.0)], Sense::Le, 0.0);
            g.dle_output.push(l);
        }
        g.phi.push(phi);
        g.orc.push(e);
        g.cascade.push(cascade);
    }
    Ok(g)
}
