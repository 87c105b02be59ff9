use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use geolith_lp::LpBackend;

use super::scenario::{aggregate_municipality, run_scenario_on};
use super::{RunError, RunOptions, Stage};
use crate::domain::{presets, Municipality, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityParameter {
    /// l/s
    FlowRate,
    /// Cap on the wellhead temperature, °C.
    WellheadTemperature,
    /// mg/l
    LiConcentration,
    /// €
    DleCapex,
    /// € per tonne of carbonate
    DleOpex,
    DleEfficiency,
    /// € per tonne of carbonate
    CarbonatePrice,
}

impl SensitivityParameter {
    pub const ALL: [SensitivityParameter; 7] = [
        SensitivityParameter::FlowRate,
        SensitivityParameter::WellheadTemperature,
        SensitivityParameter::LiConcentration,
        SensitivityParameter::DleCapex,
        SensitivityParameter::DleOpex,
        SensitivityParameter::DleEfficiency,
        SensitivityParameter::CarbonatePrice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensitivityParameter::FlowRate => "flow_rate",
            SensitivityParameter::WellheadTemperature => "wellhead_temperature",
            SensitivityParameter::LiConcentration => "li_concentration",
            SensitivityParameter::DleCapex => "dle_capex",
            SensitivityParameter::DleOpex => "dle_opex",
            SensitivityParameter::DleEfficiency => "dle_efficiency",
            SensitivityParameter::CarbonatePrice => "carbonate_price",
        }
    }

    fn admits(self, v: f64) -> bool {
        match self {
            SensitivityParameter::DleEfficiency => (0.0..=1.0).contains(&v),
            SensitivityParameter::WellheadTemperature => v.is_finite(),
            _ => v.is_finite() && v >= 0.0,
        }
    }

    /// The scenario with this parameter set to `v`.
    pub fn apply(self, base: &Scenario, v: f64) -> Scenario {
        let mut s = base.clone();
        match self {
            SensitivityParameter::FlowRate => s.flow_rate = Some(v),
            SensitivityParameter::WellheadTemperature => s.wellhead_temperature_cap = Some(v),
            SensitivityParameter::LiConcentration => s.li_concentration = Some(v),
            SensitivityParameter::DleCapex => s.dle_capex = Some(v),
            SensitivityParameter::DleOpex => s.dle_opex_per_tonne = Some(v),
            SensitivityParameter::DleEfficiency => s.dle_efficiency = Some(v),
            SensitivityParameter::CarbonatePrice => s.carbonate_price = Some(v),
        }
        s.name = format!("{}_{}={v}", base.name, self.as_str());
        s
    }
}

impl fmt::Display for SensitivityParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensitivityParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown sensitivity parameter `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub parameter: SensitivityParameter,
    pub values: Vec<f64>,
    pub base_scenario: Scenario,
}

impl SensitivitySpec {
    /// A sweep around the regional mean base point.
    pub fn around_base(parameter: SensitivityParameter, values: Vec<f64>) -> Self {
        Self {
            parameter,
            values,
            base_scenario: presets::sensitivity_base(),
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.values.is_empty() {
            return Err(RunError::validation(Stage::Sensitivity, "no values to sweep"));
        }
        if let Some(v) = self.values.iter().find(|v| !self.parameter.admits(**v)) {
            return Err(RunError::validation(
                Stage::Sensitivity,
                format!("{v} is not a valid value of {}", self.parameter),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub value: f64,
    /// €/a; `None` when the run failed.
    pub tac: Option<f64>,
    /// kWh_th per year
    pub dhp_generation: f64,
    /// kWh_el per year
    pub orc_generation: f64,
    /// t Li₂CO₃ per year
    pub carbonate_t: f64,
    pub depth: Option<f64>,
    pub error: Option<String>,
}

/// One full scenario run per value, in input order. A failing value gives a
/// row with its error and the sweep goes on.
pub fn run_sensitivity(
    muni: &Municipality,
    spec: &SensitivitySpec,
    opts: &RunOptions,
    backend: &dyn LpBackend,
) -> Result<Vec<SensitivityRow>, RunError> {
    spec.validate()?;
    let tp = aggregate_municipality(muni, opts)?;
    let rows = spec
        .values
        .iter()
        .map(|&v| {
            let scenario = spec.parameter.apply(&spec.base_scenario, v);
            match run_scenario_on(muni, &scenario, &tp, opts, backend) {
                Ok(run) => {
                    let s = &run.system;
                    let (dhp, orc) = s.geothermal.as_ref().map_or((0.0, 0.0), |g| (g.dhp_generation, g.orc_generation));
                    SensitivityRow {
                        value: v,
                        tac: Some(s.tac),
                        dhp_generation: dhp,
                        orc_generation: orc,
                        carbonate_t: s.lithium.annual_carbonate,
                        depth: s.depth.map(|d| d.depth),
                        error: None,
                    }
                }
                Err(e) => {
                    warn!("{} = {v}: {e}", spec.parameter);
                    SensitivityRow {
                        value: v,
                        tac: None,
                        dhp_generation: 0.0,
                        orc_generation: 0.0,
                        carbonate_t: 0.0,
                        depth: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in SensitivityParameter::ALL {
            assert_eq!(p.as_str().parse::<SensitivityParameter>().unwrap(), p);
        }
        assert!("depth".parse::<SensitivityParameter>().is_err());
    }

    #[test]
    fn invalid_values_are_rejected_up_front() {
        let spec = SensitivitySpec::around_base(SensitivityParameter::DleEfficiency, vec![0.5, 1.2]);
        assert_eq!(spec.validate().unwrap_err().stage, Stage::Sensitivity);
        let empty = SensitivitySpec::around_base(SensitivityParameter::FlowRate, vec![]);
        assert!(empty.validate().is_err());
    }

    #[test]
    fn apply_touches_only_the_swept_field() {
        let base = presets::sensitivity_base();
        let s = SensitivityParameter::CarbonatePrice.apply(&base, 8500.0);
        assert_eq!(s.carbonate_price, Some(8500.0));
        assert_eq!(s.flow_rate, base.flow_rate);
        assert_eq!(s.wellhead_temperature_cap, Some(115.0));
    }
}
