//! Shared domain types: commodities, time series, the technology catalog,
//! geothermal site and lithium extraction parameters, scenarios and the
//! municipality bundle that ties them together.
//!
//! Every type has a `validate` method; loaders and scenario application call
//! it so that downstream modules can rely on the invariants.

mod error;
pub mod loader;
pub mod presets;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use error::CoreError;

/// Hours in the reference year.
pub const HOURS_PER_YEAR: usize = 8760;

/// Tonnes of lithium carbonate per tonne of lithium.
pub const LI_TO_CARBONATE: f64 = 5.324;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Commodity {
    Electricity,
    HeatLow,
    ProcessHeatLow,
    ProcessHeatMedium,
    ProcessHeatHigh,
    Hydrogen,
    /// Environmental heat drawn by heat pumps; free and never balanced.
    AmbientHeat,
}

impl Commodity {
    /// Commodities with a balance row per time step.
    pub const BALANCED: [Commodity; 6] = [
        Commodity::Electricity,
        Commodity::HeatLow,
        Commodity::ProcessHeatLow,
        Commodity::ProcessHeatMedium,
        Commodity::ProcessHeatHigh,
        Commodity::Hydrogen,
    ];

    pub fn is_balanced(self) -> bool {
        self != Commodity::AmbientHeat
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Commodity::Electricity => "electricity",
            Commodity::HeatLow => "heat_low",
            Commodity::ProcessHeatLow => "process_heat_low",
            Commodity::ProcessHeatMedium => "process_heat_medium",
            Commodity::ProcessHeatHigh => "process_heat_high",
            Commodity::Hydrogen => "hydrogen",
            Commodity::AmbientHeat => "ambient_heat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Commodity::AmbientHeat].into_iter().chain(Self::BALANCED).find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Commodity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesUnit {
    /// Hourly mean power; numerically equal to hourly energy in kWh.
    Kw,
    /// Fraction of nameplate capacity available, in [0, 1].
    CapacityFactor,
}

/// Hourly series over one year.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    unit: SeriesUnit,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(unit: SeriesUnit, values: Vec<f64>) -> Result<Self, CoreError> {
        let ts = Self { unit, values };
        ts.validate()?;
        Ok(ts)
    }

    pub fn kw(values: Vec<f64>) -> Result<Self, CoreError> {
        Self::new(SeriesUnit::Kw, values)
    }

    pub fn capacity_factor(values: Vec<f64>) -> Result<Self, CoreError> {
        Self::new(SeriesUnit::CapacityFactor, values)
    }

    pub fn constant(unit: SeriesUnit, value: f64, len: usize) -> Result<Self, CoreError> {
        Self::new(unit, vec![value; len])
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.values.is_empty() {
            return Err(CoreError::invariant("time series", "length > 0"));
        }
        for (h, &v) in self.values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(CoreError::invariant(format!("time series value at hour {h} ({v})"), "finite and >= 0"));
            }
            if self.unit == SeriesUnit::CapacityFactor && v > 1.0 {
                return Err(CoreError::invariant(format!("capacity factor at hour {h} ({v})"), "<= 1"));
            }
        }
        Ok(())
    }

    pub fn unit(&self) -> SeriesUnit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechKind {
    Source,
    Conversion,
    Storage,
    Sink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    pub commodity: Commodity,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Fraction of the state of charge lost per hour.
    #[serde(default)]
    pub self_discharge: f64,
    /// Maximum charge or discharge power per unit of energy capacity (1/h).
    pub c_rate: f64,
}

/// One entry of the technology catalog.
///
/// A technology has one activity variable per time step. `io` maps each
/// commodity to its flow per unit of activity: positive for production,
/// negative for consumption. Capacity bounds the activity (storage: the
/// stored energy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologySpec {
    pub name: String,
    pub kind: TechKind,
    #[serde(default)]
    pub io: BTreeMap<Commodity, f64>,
    /// €/kW of activity, €/kWh for storage.
    pub capex_per_unit: f64,
    /// Share of CAPEX paid per year.
    #[serde(default)]
    pub fixed_opex_share: f64,
    /// €/kWh of activity; negative for revenues.
    #[serde(default)]
    pub variable_opex: f64,
    pub economic_lifetime: f64,
    #[serde(default)]
    pub capacity_min: f64,
    #[serde(default)]
    pub capacity_existing: f64,
    /// `None` is unbounded.
    #[serde(default)]
    pub capacity_max: Option<f64>,
    #[serde(default)]
    pub availability_profile: Option<String>,
    /// Maximum annual activity in kWh.
    #[serde(default)]
    pub annual_limit: Option<f64>,
    #[serde(default)]
    pub storage: Option<StorageParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TechnologySpec {
    pub fn capacity_max_or_inf(&self) -> f64 {
        self.capacity_max.unwrap_or(f64::INFINITY)
    }

    /// Energy out over energy in for conversions, ambient heat counted as
    /// input.
    pub fn conversion_efficiency(&self) -> f64 {
        let out: f64 = self.io.values().filter(|v| **v > 0.0).sum();
        let inp: f64 = self.io.values().filter(|v| **v < 0.0).map(|v| -v).sum();
        out / inp
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let what = |field: &str| format!("technology `{}` {field}", self.name);
        let nonneg = |v: f64, field: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(CoreError::invariant(what(field), ">= 0"))
            }
        };
        nonneg(self.capex_per_unit, "capex_per_unit")?;
        nonneg(self.fixed_opex_share, "fixed_opex_share")?;
        nonneg(self.capacity_min, "capacity_min")?;
        nonneg(self.capacity_existing, "capacity_existing")?;
        if !self.variable_opex.is_finite() {
            return Err(CoreError::invariant(what("variable_opex"), "finite"));
        }
        if !(self.economic_lifetime >= 1.0) {
            return Err(CoreError::invariant(what("economic_lifetime"), "lifetime >= 1"));
        }
        let max = self.capacity_max_or_inf();
        if max.is_nan() || self.capacity_min > max {
            return Err(CoreError::invariant(what("capacity"), "capacity_min <= capacity_max"));
        }
        if self.capacity_existing > max {
            return Err(CoreError::invariant(what("capacity"), "existing <= capacity_max"));
        }
        if let Some(l) = self.annual_limit {
            nonneg(l, "annual_limit")?;
        }
        for (c, v) in &self.io {
            if !v.is_finite() || *v == 0.0 {
                return Err(CoreError::invariant(what(&format!("io[{c}]")), "finite and non-zero"));
            }
        }
        match self.kind {
            TechKind::Source => {
                if self.io.is_empty() || self.io.values().any(|v| *v < 0.0) {
                    return Err(CoreError::invariant(what("io"), "sources only produce"));
                }
            }
            TechKind::Sink => {
                if self.io.is_empty() || self.io.values().any(|v| *v > 0.0) {
                    return Err(CoreError::invariant(what("io"), "sinks only consume"));
                }
            }
            TechKind::Conversion => {
                let has_in = self.io.values().any(|v| *v < 0.0);
                let has_out = self.io.values().any(|v| *v > 0.0);
                if !has_in || !has_out {
                    return Err(CoreError::invariant(what("io"), "conversions consume and produce"));
                }
                let eff = self.conversion_efficiency();
                if !(eff > 0.0 && eff <= 1.0 + 1e-12) {
                    return Err(CoreError::invariant(what("efficiency"), "0 < efficiency <= 1"));
                }
            }
            TechKind::Storage => {
                let s = self
                    .storage
                    .as_ref()
                    .ok_or_else(|| CoreError::invariant(what("storage"), "storage parameters present"))?;
                for (v, f) in [(s.charge_efficiency, "charge_efficiency"), (s.discharge_efficiency, "discharge_efficiency")] {
                    if !(v > 0.0 && v <= 1.0) {
                        return Err(CoreError::invariant(what(f), "0 < efficiency <= 1"));
                    }
                }
                if !(0.0..1.0).contains(&s.self_discharge) {
                    return Err(CoreError::invariant(what("self_discharge"), "0 <= self_discharge < 1"));
                }
                if !(s.c_rate > 0.0 && s.c_rate.is_finite()) {
                    return Err(CoreError::invariant(what("c_rate"), "c_rate > 0"));
                }
                if !s.commodity.is_balanced() {
                    return Err(CoreError::invariant(what("storage.commodity"), "balanced commodity"));
                }
            }
        }
        if self.kind != TechKind::Storage && self.io.keys().any(|c| *c == Commodity::AmbientHeat) && self.kind != TechKind::Conversion {
            return Err(CoreError::invariant(what("io"), "ambient heat only as a conversion input"));
        }
        Ok(())
    }
}

/// Cost data of a geothermal plant component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantCost {
    /// €/kW of rated output.
    pub capex_per_kw: f64,
    #[serde(default)]
    pub fixed_opex_share: f64,
    pub lifetime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeothermalCosts {
    pub orc: PlantCost,
    /// District heating plant including the network connection.
    pub dhp: PlantCost,
    pub well_lifetime: f64,
    /// Yearly operation and maintenance of the doublet as a fraction of the
    /// drilling cost.
    #[serde(default)]
    pub well_fixed_opex_share: f64,
    pub dle_lifetime: f64,
}

impl GeothermalCosts {
    pub fn validate(&self) -> Result<(), CoreError> {
        for (c, n) in [(self.orc, "orc"), (self.dhp, "dhp")] {
            if !(c.capex_per_kw >= 0.0 && c.fixed_opex_share >= 0.0) {
                return Err(CoreError::invariant(format!("geothermal {n} costs"), ">= 0"));
            }
            if !(c.lifetime >= 1.0) {
                return Err(CoreError::invariant(format!("geothermal {n} lifetime"), "lifetime >= 1"));
            }
        }
        if !(self.well_fixed_opex_share >= 0.0 && self.well_fixed_opex_share < 1.0) {
            return Err(CoreError::invariant("geothermal well_fixed_opex_share", "0 <= share < 1"));
        }
        if !(self.well_lifetime >= 1.0 && self.dle_lifetime >= 1.0) {
            return Err(CoreError::invariant("geothermal well/dle lifetime", "lifetime >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub technologies: Vec<TechnologySpec>,
    pub geothermal: GeothermalCosts,
}

impl Catalog {
    pub fn get(&self, name: &str) -> Option<&TechnologySpec> {
        self.technologies.iter().find(|t| t.name == name)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        for (i, t) in self.technologies.iter().enumerate() {
            t.validate()?;
            if self.technologies[..i].iter().any(|o| o.name == t.name) {
                return Err(CoreError::invariant(format!("technology `{}`", t.name), "unique names"));
            }
        }
        self.geothermal.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientLayer {
    /// Lower end of the layer (m below surface).
    pub depth_upper_bound: f64,
    /// °C per km.
    pub gradient: f64,
}

/// Piecewise-constant geothermal gradient below a surface temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoBasinProfile {
    pub surface_temperature: f64,
    pub layers: Vec<GradientLayer>,
}

impl GeoBasinProfile {
    pub fn single(surface_temperature: f64, gradient: f64, max_depth: f64) -> Self {
        Self {
            surface_temperature,
            layers: vec![GradientLayer {
                depth_upper_bound: max_depth,
                gradient,
            }],
        }
    }

    pub fn max_covered_depth(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.depth_upper_bound)
    }

    pub fn validate(&self, max_depth: f64) -> Result<(), CoreError> {
        if !self.surface_temperature.is_finite() {
            return Err(CoreError::invariant("basin surface_temperature", "finite"));
        }
        if self.layers.is_empty() {
            return Err(CoreError::invariant("basin layers", "at least one layer"));
        }
        let mut prev = 0.0;
        for l in &self.layers {
            if !(l.depth_upper_bound > prev) {
                return Err(CoreError::invariant("basin layer depth bounds", "strictly increasing"));
            }
            if !(l.gradient > 0.0 && l.gradient.is_finite()) {
                return Err(CoreError::invariant("basin layer gradient", "gradient > 0"));
            }
            prev = l.depth_upper_bound;
        }
        if prev < max_depth {
            return Err(CoreError::invariant("basin layers", "last bound >= max_depth"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantEfficiencies {
    pub el: f64,
    pub th: f64,
}

impl Default for PlantEfficiencies {
    fn default() -> Self {
        Self { el: 0.10, th: 0.65 }
    }
}

impl PlantEfficiencies {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.el > 0.0 && self.el <= 1.0) {
            return Err(CoreError::invariant("efficiencies.el", "0 < eta_el <= 1"));
        }
        if !(self.th > 0.0 && self.th <= 1.0) {
            return Err(CoreError::invariant("efficiencies.th", "0 < eta_th <= 1"));
        }
        Ok(())
    }
}

fn default_min_depth() -> f64 {
    1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeothermalSiteParams {
    /// l/s
    pub flow_rate: f64,
    /// kg/l
    pub brine_density: f64,
    /// kJ/(kg K)
    pub brine_heat_capacity: f64,
    pub basin: GeoBasinProfile,
    /// °C; floor for the district heating return temperature.
    pub min_injection_temperature: f64,
    #[serde(default = "default_min_depth")]
    pub min_depth: f64,
    pub max_depth: f64,
    pub depth_step: f64,
    /// Horizontal distance between production and injection well (m).
    pub well_distance: f64,
    pub second_well_cost_factor: f64,
    /// mg/l
    pub li_concentration: f64,
    #[serde(default)]
    pub wellhead_temperature_cap: Option<f64>,
    #[serde(default)]
    pub efficiencies: PlantEfficiencies,
    /// Pump electricity per unit of extracted brine heat.
    #[serde(default)]
    pub parasitic_fraction: f64,
}

impl GeothermalSiteParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        let check = |ok: bool, field: &str, inv: &str| {
            if ok {
                Ok(())
            } else {
                Err(CoreError::invariant(format!("site.{field}"), inv))
            }
        };
        check(self.flow_rate.is_finite() && self.flow_rate >= 0.0, "flow_rate", "flow_rate >= 0")?;
        check(self.brine_density.is_finite() && self.brine_density > 0.0, "brine_density", "density > 0")?;
        check(
            self.brine_heat_capacity.is_finite() && self.brine_heat_capacity > 0.0,
            "brine_heat_capacity",
            "heat capacity > 0",
        )?;
        check(
            self.min_injection_temperature.is_finite() && self.min_injection_temperature >= 0.0,
            "min_injection_temperature",
            "min_injection >= 0",
        )?;
        check(
            (1000.0..=5000.0).contains(&self.max_depth),
            "max_depth",
            "1000 <= max_depth <= 5000",
        )?;
        check(
            self.min_depth >= 1000.0 && self.min_depth <= self.max_depth,
            "min_depth",
            "1000 <= min_depth <= max_depth",
        )?;
        check(self.depth_step > 0.0 && self.depth_step.is_finite(), "depth_step", "depth_step > 0")?;
        check(self.well_distance.is_finite() && self.well_distance >= 0.0, "well_distance", "well_distance >= 0")?;
        check(
            self.second_well_cost_factor > 0.0 && self.second_well_cost_factor <= 1.0,
            "second_well_cost_factor",
            "0 < second_well_cost_factor <= 1",
        )?;
        check(
            self.li_concentration.is_finite() && self.li_concentration >= 0.0,
            "li_concentration",
            "C_Li >= 0",
        )?;
        if let Some(cap) = self.wellhead_temperature_cap {
            check(cap.is_finite(), "wellhead_temperature_cap", "finite")?;
        }
        check(
            (0.0..1.0).contains(&self.parasitic_fraction),
            "parasitic_fraction",
            "0 <= parasitic_fraction < 1",
        )?;
        self.efficiencies.validate()?;
        self.basin.validate(self.max_depth)
    }

    /// Brine heat flow per kelvin of cooling (kW/K).
    pub fn heat_flow_per_kelvin(&self) -> f64 {
        self.flow_rate * self.brine_density * self.brine_heat_capacity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DleParams {
    /// €
    pub capex: f64,
    /// € per tonne of lithium carbonate
    pub opex_per_tonne: f64,
    pub extraction_efficiency: f64,
    /// € per tonne of lithium carbonate
    pub carbonate_price: f64,
    pub li_to_carbonate_factor: f64,
}

impl DleParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(0.0..=1.0).contains(&self.extraction_efficiency) {
            return Err(CoreError::invariant("dle.extraction_efficiency", "0 <= eta_Li <= 1"));
        }
        for (v, f) in [
            (self.capex, "capex"),
            (self.opex_per_tonne, "opex_per_tonne"),
            (self.carbonate_price, "carbonate_price"),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CoreError::invariant(format!("dle.{f}"), ">= 0"));
            }
        }
        if self.li_to_carbonate_factor != LI_TO_CARBONATE {
            return Err(CoreError::invariant("dle.li_to_carbonate_factor", "conversion factor = 5.324"));
        }
        Ok(())
    }
}

/// Overrides of site and DLE parameters. `None` keeps the municipality's
/// own value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub flow_rate: Option<f64>,
    #[serde(default)]
    pub wellhead_temperature_cap: Option<f64>,
    #[serde(default)]
    pub li_concentration: Option<f64>,
    #[serde(default)]
    pub dle_capex: Option<f64>,
    #[serde(default)]
    pub dle_opex_per_tonne: Option<f64>,
    #[serde(default)]
    pub dle_efficiency: Option<f64>,
    #[serde(default)]
    pub carbonate_price: Option<f64>,
}

impl Scenario {
    /// Applies the overrides and validates the result.
    pub fn apply(
        &self,
        site: &GeothermalSiteParams,
        dle: &DleParams,
    ) -> Result<(GeothermalSiteParams, DleParams), CoreError> {
        let mut s = site.clone();
        let mut d = dle.clone();
        if let Some(v) = self.flow_rate {
            s.flow_rate = v;
        }
        if let Some(v) = self.wellhead_temperature_cap {
            s.wellhead_temperature_cap = Some(v);
        }
        if let Some(v) = self.li_concentration {
            s.li_concentration = v;
        }
        if let Some(v) = self.dle_capex {
            d.capex = v;
        }
        if let Some(v) = self.dle_opex_per_tonne {
            d.opex_per_tonne = v;
        }
        if let Some(v) = self.dle_efficiency {
            d.extraction_efficiency = v;
        }
        if let Some(v) = self.carbonate_price {
            d.carbonate_price = v;
        }
        s.validate()?;
        d.validate()?;
        Ok((s, d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Households,
    Tcs,
    Industry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicSettings {
    pub interest_rate: f64,
    pub currency_year: String,
}

impl Default for EconomicSettings {
    fn default() -> Self {
        Self {
            interest_rate: 0.05,
            currency_year: "EUR2020".into(),
        }
    }
}

impl EconomicSettings {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(0.0..1.0).contains(&self.interest_rate) {
            return Err(CoreError::invariant("economics.interest_rate", "0 <= interest_rate < 1"));
        }
        Ok(())
    }
}

/// Everything needed to optimize one municipality.
#[derive(Debug, Clone, PartialEq)]
pub struct Municipality {
    pub name: String,
    pub sectors: Vec<Sector>,
    pub demand: BTreeMap<Commodity, TimeSeries>,
    /// Availability profiles referenced by catalog technologies.
    pub profiles: BTreeMap<String, TimeSeries>,
    /// Maximum capacity per technology (kW or kWh), overriding the catalog.
    pub potentials: BTreeMap<String, f64>,
    /// Installed capacity per technology, overriding the catalog.
    pub existing: BTreeMap<String, f64>,
    pub site: GeothermalSiteParams,
    pub dle: DleParams,
    pub catalog: Catalog,
}

impl Municipality {
    /// Hours per year shared by all series.
    pub fn hours(&self) -> usize {
        self.demand
            .values()
            .chain(self.profiles.values())
            .next()
            .map_or(HOURS_PER_YEAR, TimeSeries::len)
    }

    /// Catalog entries with this municipality's potentials and existing
    /// capacities applied.
    pub fn technologies(&self) -> Vec<TechnologySpec> {
        self.catalog
            .technologies
            .iter()
            .map(|t| {
                let mut t = t.clone();
                if let Some(&p) = self.potentials.get(&t.name) {
                    t.capacity_max = Some(p);
                }
                if let Some(&e) = self.existing.get(&t.name) {
                    t.capacity_existing = e;
                }
                t
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        self.catalog.validate()?;
        let len = self.hours();
        for (c, ts) in &self.demand {
            if !c.is_balanced() {
                return Err(CoreError::invariant(format!("demand `{c}`"), "balanced commodity"));
            }
            if ts.unit() != SeriesUnit::Kw {
                return Err(CoreError::invariant(format!("demand `{c}`"), "unit kW"));
            }
            ts.validate()?;
            if ts.len() != len {
                return Err(CoreError::LengthMismatch {
                    series: format!("demand.{c}"),
                    expected: len,
                    got: ts.len(),
                });
            }
        }
        for (n, ts) in &self.profiles {
            if ts.unit() != SeriesUnit::CapacityFactor {
                return Err(CoreError::invariant(format!("profile `{n}`"), "unit capacity factor"));
            }
            ts.validate()?;
            if ts.len() != len {
                return Err(CoreError::LengthMismatch {
                    series: format!("profiles.{n}"),
                    expected: len,
                    got: ts.len(),
                });
            }
        }
        for name in self.potentials.keys().chain(self.existing.keys()) {
            if self.catalog.get(name).is_none() {
                return Err(CoreError::UnknownTechnology(name.clone()));
            }
        }
        for t in self.technologies() {
            t.validate()?;
            if let Some(p) = &t.availability_profile {
                if !self.profiles.contains_key(p) {
                    return Err(CoreError::MissingProfile {
                        technology: t.name.clone(),
                        profile: p.clone(),
                    });
                }
            }
        }
        self.site.validate()?;
        self.dle.validate()
    }
}
