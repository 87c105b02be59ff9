use std::cmp::Ordering;
use std::str::FromStr;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use geolith_lp::LpBackend;

use super::scenario::{aggregate_municipality, run_scenario_on};
use super::{RunError, RunOptions, Stage};
use crate::domain::synth::SyntheticMunicipality;
use crate::domain::{Municipality, Scenario};
use crate::esom::SolvedSystem;
use crate::geothermal::site_wellhead_temperature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FleetOrdering {
    /// Hottest achievable wellhead first, ties broken by ORC capacity.
    #[default]
    TemperatureThenOrc,
    /// ORC capacity first, ties broken by temperature. Puts the plants
    /// without power generation in the tail regardless of temperature.
    OrcThenTemperature,
}

impl FromStr for FleetOrdering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "temperature" | "temperature_then_orc" => Ok(FleetOrdering::TemperatureThenOrc),
            "orc" | "orc_then_temperature" => Ok(FleetOrdering::OrcThenTemperature),
            _ => Err(format!("unknown fleet ordering `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetEntry {
    pub municipality: String,
    /// At the deepest admissible option, after the scenario's cap (°C).
    /// `None` when the site parameters were rejected.
    pub max_wellhead_temperature: Option<f64>,
    pub with_dle: Option<SolvedSystem>,
    pub without_dle: Option<SolvedSystem>,
    pub errors: Vec<String>,
}

impl FleetEntry {
    fn orc_kw(&self) -> f64 {
        self.with_dle.as_ref().map_or(0.0, SolvedSystem::orc_capacity)
    }

    fn dhp_kw(&self) -> f64 {
        self.with_dle.as_ref().map_or(0.0, SolvedSystem::dhp_capacity)
    }

    fn carbonate_t(&self) -> f64 {
        self.with_dle.as_ref().map_or(0.0, |s| s.lithium.annual_carbonate)
    }
}

/// One step of the cumulative curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// k / N
    pub share: f64,
    pub orc_mw_cum: f64,
    pub dhp_mw_cum: f64,
    pub li2co3_t_cum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetResult {
    pub scenario: String,
    /// In input order.
    pub entries: Vec<FleetEntry>,
    /// Indices into `entries` in curve order.
    pub order: Vec<usize>,
    pub ordering: FleetOrdering,
    /// From the with-DLE runs; failed runs count as zero.
    pub curve: Vec<CurvePoint>,
}

impl FleetResult {
    pub fn failures(&self) -> impl Iterator<Item = &FleetEntry> {
        self.entries.iter().filter(|e| !e.errors.is_empty())
    }
}

fn max_temperature(muni: &Municipality, scenario: &Scenario) -> Result<f64, RunError> {
    let (site, _) = scenario
        .apply(&muni.site, &muni.dle)
        .map_err(|e| RunError::validation(Stage::Scenario, format!("{}: {e}", muni.name)))?;
    site_wellhead_temperature(site.max_depth, &site)
        .map_err(|e| RunError::validation(Stage::Scenario, format!("{}: {e}", muni.name)))
}

fn run_one(muni: &Municipality, scenario: &Scenario, opts: &RunOptions, backend: &dyn LpBackend) -> FleetEntry {
    let mut entry = FleetEntry {
        municipality: muni.name.clone(),
        max_wellhead_temperature: None,
        with_dle: None,
        without_dle: None,
        errors: Vec::new(),
    };
    match max_temperature(muni, scenario) {
        Ok(t) => entry.max_wellhead_temperature = Some(t),
        Err(e) => {
            entry.errors.push(e.to_string());
            return entry;
        }
    }
    let tp = match aggregate_municipality(muni, opts) {
        Ok(tp) => tp,
        Err(e) => {
            entry.errors.push(e.to_string());
            return entry;
        }
    };
    for dle_enabled in [true, false] {
        let o = RunOptions {
            dle_enabled,
            ..opts.clone()
        };
        match run_scenario_on(muni, scenario, &tp, &o, backend) {
            Ok(run) if dle_enabled => entry.with_dle = Some(run.system),
            Ok(run) => entry.without_dle = Some(run.system),
            Err(e) => entry.errors.push(format!("{} DLE: {e}", if dle_enabled { "with" } else { "without" })),
        }
    }
    info!("{}: done", muni.name);
    entry
}

fn curve_order(entries: &[FleetEntry], ordering: FleetOrdering) -> Vec<usize> {
    let desc = |a: f64, b: f64| b.total_cmp(&a);
    let temp = |e: &FleetEntry| e.max_wellhead_temperature.unwrap_or(f64::NEG_INFINITY);
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&entries[i], &entries[j]);
        let by_t = desc(temp(a), temp(b));
        let by_orc = desc(a.orc_kw(), b.orc_kw());
        let key = match ordering {
            FleetOrdering::TemperatureThenOrc => by_t.then(by_orc),
            FleetOrdering::OrcThenTemperature => by_orc.then(by_t),
        };
        if key == Ordering::Equal {
            i.cmp(&j)
        } else {
            key
        }
    });
    order
}

fn curve(entries: &[FleetEntry], order: &[usize]) -> Vec<CurvePoint> {
    let n = order.len() as f64;
    let (mut orc, mut dhp, mut li) = (0.0, 0.0, 0.0);
    order
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let e = &entries[i];
            orc += e.orc_kw() / 1000.0;
            dhp += e.dhp_kw() / 1000.0;
            li += e.carbonate_t();
            CurvePoint {
                share: (k + 1) as f64 / n,
                orc_mw_cum: orc,
                dhp_mw_cum: dhp,
                li2co3_t_cum: li,
            }
        })
        .collect()
}

/// Runs every municipality with and without lithium extraction on `jobs`
/// threads. The result does not depend on `jobs` or on completion order.
pub fn run_fleet(
    munis: &[Municipality],
    scenario: &Scenario,
    opts: &RunOptions,
    backend: &dyn LpBackend,
    jobs: usize,
    ordering: FleetOrdering,
) -> Result<FleetResult, RunError> {
    if munis.is_empty() {
        return Err(RunError::validation(Stage::Fleet, "the fleet is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError::validation(Stage::Fleet, e.to_string()))?;
    let entries: Vec<FleetEntry> =
        pool.install(|| munis.par_iter().map(|m| run_one(m, scenario, opts, backend)).collect());
    let order = curve_order(&entries, ordering);
    let curve = curve(&entries, &order);
    Ok(FleetResult {
        scenario: scenario.name.clone(),
        entries,
        order,
        ordering,
        curve,
    })
}

/// `n` municipalities around the Bruchsal-like one: demand scaled by 0.3 to
/// 2, renewable potentials by 0.5 to 2, site parameters spread over the
/// regional ranges.
pub fn synthetic_fleet(n: usize, seed: u64) -> Vec<SyntheticMunicipality> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = SyntheticMunicipality::bruchsal_like();
    (0..n)
        .map(|i| {
            let demand = rng.random_range(0.3..2.0);
            let potential = rng.random_range(0.5..2.0);
            let mut m = base.clone();
            m.name = format!("synthetic_{i:03}");
            m.electricity *= demand;
            m.heat *= demand;
            m.hydrogen *= demand;
            m.pv_full_load_hours = rng.random_range(900.0..1100.0);
            m.wind_full_load_hours = rng.random_range(1600.0..2600.0);
            for (_, v) in m.potentials.iter_mut() {
                *v *= potential;
            }
            for (_, v) in m.existing.iter_mut() {
                *v *= demand.min(potential);
            }
            m.flow_rate = rng.random_range(20.0..100.0);
            m.li_concentration = rng.random_range(150.0..200.0);
            m.wellhead_temperature_cap = Some(rng.random_range(110.0..165.0));
            m.seed = rng.random();
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(t: f64) -> FleetEntry {
        FleetEntry {
            municipality: String::new(),
            max_wellhead_temperature: Some(t),
            with_dle: None,
            without_dle: None,
            errors: vec!["failed".into()],
        }
    }

    #[test]
    fn ties_keep_input_order() {
        let es = vec![entry(120.0), entry(150.0), entry(120.0)];
        assert_eq!(curve_order(&es, FleetOrdering::TemperatureThenOrc), vec![1, 0, 2]);
    }

    #[test]
    fn failed_entries_count_as_zero() {
        let es = vec![entry(120.0), entry(150.0)];
        let c = curve(&es, &[1, 0]);
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].share, 1.0);
        assert_eq!(c[1].li2co3_t_cum, 0.0);
    }

    #[test]
    fn synthetic_fleets_are_seeded() {
        let a = synthetic_fleet(5, 3);
        let b = synthetic_fleet(5, 3);
        assert_eq!(a.len(), 5);
        assert_eq!(
            a.iter().map(|m| m.flow_rate.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|m| m.flow_rate.to_bits()).collect::<Vec<_>>()
        );
        assert!(a.iter().all(|m| (20.0..100.0).contains(&m.flow_rate)));
    }
}
