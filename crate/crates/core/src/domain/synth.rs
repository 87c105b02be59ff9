//! Seeded synthetic demand and availability series.
//!
//! These stand in for regionalized demand data and renewable profiles. The
//! shapes are plausible rather than calibrated: a temperate-climate heating
//! season, weekday/weekend electricity patterns, solar geometry at 49° N and
//! an autocorrelated wind speed process.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::presets::{default_dle, default_site};
use super::{Catalog, Commodity, CoreError, Municipality, Sector, TimeSeries, HOURS_PER_YEAR};

/// Demand shapes understood by [`synthesize_demand`].
pub const SHAPES: [&str; 3] = ["default", "residential", "flat"];

/// Hourly demand series whose annual sums equal the given totals.
///
/// `default` splits heat into low-temperature heat and three process heat
/// tiers; `residential` puts all heat into low-temperature heat; `flat`
/// spreads both totals evenly over the year.
pub fn synthesize_demand(
    total_el: f64,
    total_heat: f64,
    shape: &str,
    seed: u64,
) -> Result<BTreeMap<Commodity, TimeSeries>, CoreError> {
    if !(total_el >= 0.0 && total_el.is_finite() && total_heat >= 0.0 && total_heat.is_finite()) {
        return Err(CoreError::invariant("demand totals", "totals >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let temp = outdoor_temperature(&mut rng);
    let mut out = BTreeMap::new();
    match shape {
        "flat" => {
            let ones = vec![1.0; HOURS_PER_YEAR];
            out.insert(Commodity::Electricity, TimeSeries::kw(scale_to(&ones, total_el))?);
            out.insert(Commodity::HeatLow, TimeSeries::kw(scale_to(&ones, total_heat))?);
        }
        "default" | "residential" => {
            let el = electricity_shape(&temp, &mut rng);
            out.insert(Commodity::Electricity, TimeSeries::kw(scale_to(&el, total_el))?);
            let space = space_heat_shape(&temp);
            if shape == "residential" {
                out.insert(Commodity::HeatLow, TimeSeries::kw(scale_to(&space, total_heat))?);
            } else {
                let process = process_heat_shape(&mut rng);
                // 300 / 60 / 70 / 35 of 465 units
                let split = [
                    (Commodity::HeatLow, 300.0 / 465.0, &space),
                    (Commodity::ProcessHeatLow, 60.0 / 465.0, &process),
                    (Commodity::ProcessHeatMedium, 70.0 / 465.0, &process),
                    (Commodity::ProcessHeatHigh, 35.0 / 465.0, &process),
                ];
                for (c, share, w) in split {
                    out.insert(c, TimeSeries::kw(scale_to(w, total_heat * share))?);
                }
            }
        }
        _ => {
            return Err(CoreError::UnknownName {
                kind: "demand shape",
                name: shape.to_string(),
            })
        }
    }
    Ok(out)
}

/// Flat industrial series with a small weekday/weekend swing.
pub fn synthesize_flat_industrial(total: f64, seed: u64) -> Result<TimeSeries, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TimeSeries::kw(scale_to(&process_heat_shape(&mut rng), total))
}

/// Rescales non-negative weights so they sum to `total`.
fn scale_to(weights: &[f64], total: f64) -> Vec<f64> {
    let s: f64 = weights.iter().sum();
    if total == 0.0 || s == 0.0 {
        return vec![0.0; weights.len()];
    }
    let f = total / s;
    weights.iter().map(|w| w * f).collect()
}

fn day_of(h: usize) -> usize {
    h / 24
}

fn is_weekend(h: usize) -> bool {
    day_of(h) % 7 >= 5
}

/// Hourly outdoor temperature in °C: annual cosine with its minimum in mid
/// January, a diurnal swing, and AR(1) day-to-day weather noise.
fn outdoor_temperature(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let noise = Normal::new(0.0, 2.0).unwrap();
    let mut anomaly = 0.0;
    let mut out = Vec::with_capacity(HOURS_PER_YEAR);
    for d in 0..365 {
        anomaly = 0.8 * anomaly + noise.sample(rng);
        let seasonal = 10.5 - 9.5 * (2.0 * PI * (d as f64 - 15.0) / 365.0).cos();
        for hod in 0..24 {
            let diurnal = -3.0 * (2.0 * PI * (hod as f64 - 3.0) / 24.0).cos();
            out.push(seasonal + diurnal + anomaly);
        }
    }
    out
}

fn electricity_shape(temp: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..HOURS_PER_YEAR)
        .map(|h| {
            let hod = h % 24;
            let daily = match hod {
                0..=5 => 0.65,
                6..=8 => 0.9 + 0.05 * (hod - 6) as f64,
                9..=16 => 1.05,
                17..=20 => 1.15,
                _ => 0.85,
            };
            let week = if is_weekend(h) { 0.85 } else { 1.0 };
            let season = 1.0 + 0.004 * (12.0 - temp[h]).max(0.0);
            daily * week * season * (1.0 + 0.03 * (rng.random::<f64>() - 0.5))
        })
        .collect()
}

/// Heating degree hours below 15 °C plus a hot-water base load.
fn space_heat_shape(temp: &[f64]) -> Vec<f64> {
    temp.iter()
        .enumerate()
        .map(|(h, t)| {
            let hod = h % 24;
            let occupancy = if (6..22).contains(&hod) { 1.1 } else { 0.8 };
            (15.0 - t).max(0.0) * occupancy + 2.0
        })
        .collect()
}

fn process_heat_shape(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..HOURS_PER_YEAR)
        .map(|h| {
            let shift = if (6..22).contains(&(h % 24)) { 1.15 } else { 0.8 };
            let week = if is_weekend(h) { 0.7 } else { 1.0 };
            shift * week * (1.0 + 0.05 * (rng.random::<f64>() - 0.5))
        })
        .collect()
}

/// Photovoltaic capacity factors from solar elevation at 49° N and daily
/// cloudiness, scaled to roughly `full_load_hours`.
pub fn synthesize_pv_profile(full_load_hours: f64, seed: u64) -> Result<TimeSeries, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat = 49.0f64.to_radians();
    let mut raw = Vec::with_capacity(HOURS_PER_YEAR);
    for d in 0..365 {
        let decl = (23.44f64).to_radians() * (2.0 * PI * (d as f64 - 80.0) / 365.0).sin();
        let clear: f64 = rng.random();
        let cloud = 0.25 + 0.75 * clear.powf(0.7);
        for hod in 0..24 {
            let hour_angle = (15.0 * (hod as f64 + 0.5 - 12.0)).to_radians();
            let sin_el = lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos();
            raw.push(sin_el.max(0.0).powf(1.2) * cloud);
        }
    }
    TimeSeries::capacity_factor(fit_full_load_hours(raw, full_load_hours))
}

/// Wind capacity factors from an AR(1) wind speed through a cubic power
/// curve, scaled to roughly `full_load_hours`.
pub fn synthesize_wind_profile(full_load_hours: f64, seed: u64) -> Result<TimeSeries, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut z = 0.0f64;
    let mut raw = Vec::with_capacity(HOURS_PER_YEAR);
    for h in 0..HOURS_PER_YEAR {
        z = 0.97 * z + 0.243 * noise.sample(&mut rng);
        let season = 1.0 + 0.2 * (2.0 * PI * (day_of(h) as f64 - 15.0) / 365.0).cos();
        let speed = (6.5 * season * (0.45 * z).exp()).max(0.0);
        let p = if speed < 3.0 || speed > 25.0 {
            0.0
        } else if speed >= 12.0 {
            1.0
        } else {
            (speed.powi(3) - 27.0) / (1728.0 - 27.0)
        };
        raw.push(p);
    }
    TimeSeries::capacity_factor(fit_full_load_hours(raw, full_load_hours))
}

/// Multiplies by a common factor, clipping at 1, so the sum approaches the
/// target. Bisection on the factor because clipping makes it nonlinear.
fn fit_full_load_hours(raw: Vec<f64>, target: f64) -> Vec<f64> {
    let eval = |f: f64| raw.iter().map(|v| (v * f).min(1.0)).sum::<f64>();
    let max_possible = raw.iter().filter(|v| **v > 0.0).count() as f64;
    let target = target.min(max_possible);
    let (mut lo, mut hi) = (0.0, 1.0);
    while eval(hi) < target && hi < 1e6 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    raw.iter().map(|v| (v * hi).min(1.0)).collect()
}

/// Parameters of a synthetic municipality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMunicipality {
    pub name: String,
    /// Final electricity demand excluding sector coupling (kWh/a).
    pub electricity: f64,
    /// Heat demand over all temperature tiers (kWh/a).
    pub heat: f64,
    /// kWh/a
    pub hydrogen: f64,
    pub pv_full_load_hours: f64,
    pub wind_full_load_hours: f64,
    /// Technology → maximum capacity (kW).
    pub potentials: Vec<(String, f64)>,
    /// Technology → installed capacity (kW).
    pub existing: Vec<(String, f64)>,
    pub flow_rate: f64,
    pub li_concentration: f64,
    pub wellhead_temperature_cap: Option<f64>,
    pub seed: u64,
}

impl SyntheticMunicipality {
    /// A mid-sized municipality in the Upper Rhine Graben with a low-flow
    /// lithium-bearing geothermal site. Internal sector-coupling
    /// consumption is left to the optimizer, so the electricity demand is
    /// final demand only.
    pub fn bruchsal_like() -> Self {
        let kw = |n: &str, v: f64| (n.to_string(), v);
        Self {
            name: "bruchsal_like".into(),
            electricity: 297e6,
            heat: 465e6,
            hydrogen: 10e6,
            pv_full_load_hours: 980.0,
            wind_full_load_hours: 2100.0,
            potentials: vec![
                kw("wind_onshore", 75_000.0),
                kw("pv_open_field", 31_000.0),
                kw("pv_rooftop", 290_000.0),
            ],
            existing: vec![kw("pv_open_field", 1_220.0), kw("pv_rooftop", 24_000.0)],
            flow_rate: 24.0,
            li_concentration: 159.0,
            wellhead_temperature_cap: Some(131.0),
            seed: 42,
        }
    }

    pub fn build(&self, catalog: Catalog) -> Result<Municipality, CoreError> {
        let mut demand = synthesize_demand(self.electricity, self.heat, "default", self.seed)?;
        demand.insert(
            Commodity::Hydrogen,
            synthesize_flat_industrial(self.hydrogen, self.seed.wrapping_add(1))?,
        );
        let profiles = [
            ("pv".to_string(), synthesize_pv_profile(self.pv_full_load_hours, self.seed.wrapping_add(2))?),
            ("wind".to_string(), synthesize_wind_profile(self.wind_full_load_hours, self.seed.wrapping_add(3))?),
        ]
        .into_iter()
        .collect();
        let mut site = default_site();
        site.flow_rate = self.flow_rate;
        site.li_concentration = self.li_concentration;
        site.wellhead_temperature_cap = self.wellhead_temperature_cap;
        let mut dle = default_dle();
        dle.capex = 20.8e6;
        let muni = Municipality {
            name: self.name.clone(),
            sectors: vec![Sector::Households, Sector::Tcs, Sector::Industry],
            demand,
            profiles,
            potentials: self.potentials.iter().cloned().collect(),
            existing: self.existing.iter().cloned().collect(),
            site,
            dle,
            catalog,
        };
        muni.validate()?;
        Ok(muni)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_are_met() {
        let d = synthesize_demand(480e6, 465e6, "default", 42).unwrap();
        let el = d[&Commodity::Electricity].sum();
        let heat: f64 = d.iter().filter(|(c, _)| **c != Commodity::Electricity).map(|(_, s)| s.sum()).sum();
        assert!((el - 480e6).abs() <= 1e-6 * 480e6);
        assert!((heat - 465e6).abs() <= 1e-6 * 465e6);
    }

    #[test]
    fn zero_totals_give_zero_series() {
        let d = synthesize_demand(0.0, 0.0, "default", 1).unwrap();
        assert!(d.values().all(|s| s.values().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn same_seed_same_series() {
        let a = synthesize_demand(1e6, 2e6, "residential", 7).unwrap();
        let b = synthesize_demand(1e6, 2e6, "residential", 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_shape_is_rejected() {
        assert!(synthesize_demand(1.0, 1.0, "spiky", 0).is_err());
    }

    #[test]
    fn profiles_hit_full_load_hours() {
        let pv = synthesize_pv_profile(980.0, 3).unwrap();
        let wind = synthesize_wind_profile(2100.0, 4).unwrap();
        assert!((pv.sum() - 980.0).abs() < 1e-3);
        assert!((wind.sum() - 2100.0).abs() < 1e-3);
        assert!(pv.max() <= 1.0 && wind.max() <= 1.0);
    }
}
