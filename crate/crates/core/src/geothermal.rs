//! Subsurface temperature, drilling cost and the ORC / district heating
//! plant equations of a geothermal doublet.
//!
//! Brine heat flow is `flow [l/s] · ρ [kg/l] · c_p [kJ/(kg K)]`, which is kW
//! per kelvin of cooling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{GeoBasinProfile, GeothermalSiteParams};

/// Fixed part of the single-well cost (€).
pub const DRILL_FIXED: f64 = 610_000.0;
/// Scale of the exponential part of the single-well cost (€).
pub const DRILL_SCALE: f64 = 1.015 * 1.198 * 1e6;
/// Exponent per metre of well path.
pub const DRILL_EXPONENT: f64 = 0.00047894;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("depth {depth} m outside the basin profile [0, {max}] m")]
    DepthOutOfRange { depth: f64, max: f64 },
    #[error("temperature ordering violated: {lower} °C must not exceed {upper} °C")]
    TemperatureOrder { upper: f64, lower: f64 },
    #[error("district heating return {t_dhp} °C is below the injection floor {floor} °C")]
    BelowInjectionFloor { t_dhp: f64, floor: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// A candidate drilling depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthOption {
    pub depth: f64,
    pub wellhead_temperature: f64,
    /// Both wells (€).
    pub drilling_cost_total: f64,
    /// Brine heat above the injection floor at full flow (kW_th).
    pub max_thermal_power: f64,
}

/// Surface temperature plus the integral of the layer gradients over
/// `[0, depth]`. No temperature cap is applied.
pub fn wellhead_temperature(depth: f64, basin: &GeoBasinProfile) -> Result<f64, GeoError> {
    let max = basin.max_covered_depth();
    if !(0.0..=max).contains(&depth) {
        return Err(GeoError::DepthOutOfRange { depth, max });
    }
    let mut t = basin.surface_temperature;
    let mut top = 0.0;
    for layer in &basin.layers {
        let bottom = layer.depth_upper_bound.min(depth);
        if bottom > top {
            t += layer.gradient * (bottom - top) / 1000.0;
        }
        if depth <= layer.depth_upper_bound {
            break;
        }
        top = layer.depth_upper_bound;
    }
    Ok(t)
}

/// Wellhead temperature at a site, clipped at its temperature cap.
pub fn site_wellhead_temperature(depth: f64, site: &GeothermalSiteParams) -> Result<f64, GeoError> {
    let t = wellhead_temperature(depth, &site.basin)?;
    Ok(site.wellhead_temperature_cap.map_or(t, |cap| t.min(cap)))
}

/// Cost of one well whose path length combines depth and horizontal offset.
pub fn single_well_cost(depth: f64, well_distance: f64) -> f64 {
    let path = depth.hypot(well_distance);
    DRILL_FIXED + DRILL_SCALE * (DRILL_EXPONENT * path).exp()
}

/// Cost of the doublet (€): one well plus the second at a fraction of it.
pub fn drilling_cost(depth: f64, well_distance: f64, second_well_factor: f64) -> f64 {
    single_well_cost(depth, well_distance) * (1.0 + second_well_factor)
}

fn check_physical(flow: f64, density: f64, heat_capacity: f64, eta: f64) -> Result<(), GeoError> {
    if !(flow >= 0.0 && flow.is_finite()) {
        return Err(GeoError::InvalidInput("flow must be finite and >= 0"));
    }
    if !(density > 0.0 && heat_capacity > 0.0) {
        return Err(GeoError::InvalidInput("density and heat capacity must be > 0"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(GeoError::InvalidInput("efficiency must lie in (0, 1]"));
    }
    Ok(())
}

/// Electric output of the ORC cooling brine from `t_pw` to `t_orc` (kW_el).
pub fn orc_power(
    flow: f64,
    density: f64,
    heat_capacity: f64,
    t_pw: f64,
    t_orc: f64,
    eta_el: f64,
) -> Result<f64, GeoError> {
    check_physical(flow, density, heat_capacity, eta_el)?;
    if t_orc > t_pw {
        return Err(GeoError::TemperatureOrder {
            upper: t_pw,
            lower: t_orc,
        });
    }
    Ok(flow * density * heat_capacity * (t_pw - t_orc) * eta_el)
}

/// Heat delivered by the district heating plant cooling brine from `t_orc`
/// to `t_dhp` (kW_th). `t_dhp` may not go below `min_injection`.
#[allow(clippy::too_many_arguments)]
pub fn dhp_heat(
    flow: f64,
    density: f64,
    heat_capacity: f64,
    t_orc: f64,
    t_dhp: f64,
    eta_th: f64,
    min_injection: f64,
) -> Result<f64, GeoError> {
    check_physical(flow, density, heat_capacity, eta_th)?;
    if t_dhp < min_injection {
        return Err(GeoError::BelowInjectionFloor {
            t_dhp,
            floor: min_injection,
        });
    }
    if t_dhp > t_orc {
        return Err(GeoError::TemperatureOrder {
            upper: t_orc,
            lower: t_dhp,
        });
    }
    Ok(flow * density * heat_capacity * (t_orc - t_dhp) * eta_th)
}

/// Brine heat available above the injection floor (kW_th), zero when the
/// brine is not warmer than the floor.
pub fn max_thermal_power(site: &GeothermalSiteParams, t_pw: f64) -> f64 {
    site.heat_flow_per_kelvin() * (t_pw - site.min_injection_temperature).max(0.0)
}

/// One option per depth step from the site's minimum to its maximum depth,
/// ascending.
pub fn enumerate_depth_options(site: &GeothermalSiteParams) -> Result<Vec<DepthOption>, GeoError> {
    let span = site.max_depth - site.min_depth;
    let steps = (span / site.depth_step + 1e-9).floor() as usize;
    (0..=steps)
        .map(|k| {
            let depth = site.min_depth + k as f64 * site.depth_step;
            let t = site_wellhead_temperature(depth, site)?;
            Ok(DepthOption {
                depth,
                wellhead_temperature: t,
                drilling_cost_total: drilling_cost(depth, site.well_distance, site.second_well_cost_factor),
                max_thermal_power: max_thermal_power(site, t),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::presets::{default_site, single_gradient_basin, urg_basin};

    #[test]
    fn surface_and_piecewise_gradient() {
        let b = urg_basin();
        assert_eq!(wellhead_temperature(0.0, &b).unwrap(), 10.0);
        let t = wellhead_temperature(2470.0, &b).unwrap();
        assert!((t - (10.0 + 47.0 * 1.9 + 41.0 * 0.57)).abs() < 1e-9);
        let m = wellhead_temperature(3000.0, &single_gradient_basin(32.0)).unwrap();
        assert!((m - 106.0).abs() < 1e-9);
    }

    #[test]
    fn depth_beyond_profile_is_an_error() {
        assert!(matches!(
            wellhead_temperature(5001.0, &urg_basin()),
            Err(GeoError::DepthOutOfRange { .. })
        ));
    }

    #[test]
    fn drilling_cost_floor_and_known_values() {
        let zero = drilling_cost(0.0, 0.0, 0.9);
        assert!((zero - 1.9 * (0.61e6 + 1.21597e6)).abs() < 10.0);
        let c1 = single_well_cost(1000.0, 0.0);
        assert!((c1 - 2.573e6).abs() < 1e3);
        assert!((drilling_cost(1000.0, 0.0, 0.9) - 4.889e6).abs() < 2e3);
        let bruchsal = drilling_cost(2470.0, 1887.0, 0.9);
        assert!((bruchsal - 11.40e6).abs() < 0.01 * 11.40e6);
    }

    #[test]
    fn plant_equations() {
        let p = orc_power(75.0, 0.95, 4.31, 131.0, 81.0, 0.10).unwrap();
        assert!((p - 1535.4375).abs() < 1e-9);
        assert_eq!(orc_power(75.0, 0.95, 4.31, 90.0, 90.0, 0.1).unwrap(), 0.0);
        let q = dhp_heat(24.0, 0.95, 4.31, 123.0, 50.0, 0.65, 50.0).unwrap();
        assert!((q - 4662.8).abs() < 0.1);
        assert_eq!(dhp_heat(0.0, 0.95, 4.31, 90.0, 60.0, 0.65, 50.0).unwrap(), 0.0);
    }

    #[test]
    fn plant_equation_errors() {
        assert!(matches!(
            orc_power(75.0, 0.95, 4.31, 80.0, 81.0, 0.1),
            Err(GeoError::TemperatureOrder { .. })
        ));
        assert!(matches!(
            dhp_heat(75.0, 0.95, 4.31, 80.0, 45.0, 0.65, 50.0),
            Err(GeoError::BelowInjectionFloor { .. })
        ));
    }

    #[test]
    fn enumeration_spans_depth_range() {
        let opts = enumerate_depth_options(&default_site()).unwrap();
        assert_eq!(opts.len(), 401);
        assert_eq!(opts[0].depth, 1000.0);
        assert_eq!(opts[400].depth, 5000.0);
        assert!(opts.windows(2).all(|w| w[0].depth < w[1].depth));
    }

    #[test]
    fn shallow_options_below_floor_carry_no_heat() {
        let mut site = default_site();
        site.wellhead_temperature_cap = Some(65.0);
        site.basin = single_gradient_basin(30.0);
        let opts = enumerate_depth_options(&site).unwrap();
        // 10 + 30 * 1.0 = 40 °C at 1000 m
        assert_eq!(opts[0].max_thermal_power, 0.0);
        assert!(opts.iter().all(|o| o.wellhead_temperature <= 65.0));
    }
}
