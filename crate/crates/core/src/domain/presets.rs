//! Scenario presets for the four Bruchsal cases and the regional mean case,
//! plus the default site, basin and lithium parameters.

use super::{
    CoreError, DleParams, GeoBasinProfile, GeothermalSiteParams, GradientLayer, PlantEfficiencies, Scenario,
    LI_TO_CARBONATE,
};

pub const PRESET_NAMES: [&str; 5] = ["worst", "baseline", "optimistic", "best", "mean_urg"];

/// Returns the named scenario. `mean_urg` leaves the temperature cap to the
/// municipality.
pub fn scenario_preset(name: &str) -> Result<Scenario, CoreError> {
    // (flow l/s, cap °C, C_Li mg/l, capex €, opex €/t, efficiency, price €/t)
    let row = match name {
        "worst" => (24.0, Some(65.0), 86.0, 31.2e6, 8000.0, 0.5, 8500.0),
        "baseline" => (24.0, Some(131.0), 159.0, 20.8e6, 4000.0, 0.7, 17000.0),
        "optimistic" => (82.0, Some(176.0), 198.0, 15.8e6, 3000.0, 0.8, 21250.0),
        "best" => (140.0, Some(220.0), 237.0, 10.9e6, 2000.0, 0.9, 25500.0),
        "mean_urg" => (75.0, None, 175.0, 20.8e6, 4000.0, 0.7, 17000.0),
        _ => {
            return Err(CoreError::UnknownName {
                kind: "scenario preset",
                name: name.to_string(),
            })
        }
    };
    Ok(Scenario {
        name: name.to_string(),
        flow_rate: Some(row.0),
        wellhead_temperature_cap: row.1,
        li_concentration: Some(row.2),
        dle_capex: Some(row.3),
        dle_opex_per_tonne: Some(row.4),
        dle_efficiency: Some(row.5),
        carbonate_price: Some(row.6),
    })
}

/// Base point of the one-at-a-time sensitivity sweeps: regional mean
/// values with the wellhead temperature capped at 115 °C.
pub fn sensitivity_base() -> Scenario {
    let mut s = scenario_preset("mean_urg").expect("preset exists");
    s.name = "sensitivity_base".into();
    s.wellhead_temperature_cap = Some(115.0);
    s
}

/// Piecewise gradient of the Upper Rhine Graben over a 10 °C surface.
pub fn urg_basin() -> GeoBasinProfile {
    GeoBasinProfile {
        surface_temperature: 10.0,
        layers: vec![
            GradientLayer {
                depth_upper_bound: 1900.0,
                gradient: 47.0,
            },
            GradientLayer {
                depth_upper_bound: 3250.0,
                gradient: 41.0,
            },
            GradientLayer {
                depth_upper_bound: 5000.0,
                gradient: 33.0,
            },
        ],
    }
}

/// Single-gradient basin (Molasse 32, North German 35, other 43 °C/km).
pub fn single_gradient_basin(gradient: f64) -> GeoBasinProfile {
    GeoBasinProfile::single(10.0, gradient, 5000.0)
}

/// Regional mean site in the Upper Rhine Graben.
pub fn default_site() -> GeothermalSiteParams {
    GeothermalSiteParams {
        flow_rate: 75.0,
        brine_density: 0.95,
        brine_heat_capacity: 4.31,
        basin: urg_basin(),
        min_injection_temperature: 50.0,
        min_depth: 1000.0,
        max_depth: 5000.0,
        depth_step: 10.0,
        well_distance: 1887.0,
        second_well_cost_factor: 0.9,
        li_concentration: 175.0,
        wellhead_temperature_cap: None,
        efficiencies: PlantEfficiencies::default(),
        parasitic_fraction: 0.0,
    }
}

pub fn default_dle() -> DleParams {
    DleParams {
        capex: 20.8e6,
        opex_per_tonne: 4000.0,
        extraction_efficiency: 0.7,
        carbonate_price: 17000.0,
        li_to_carbonate_factor: LI_TO_CARBONATE,
    }
}
