//! Small hand-built instances shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use geolith::domain::loader::{bundled_catalog, bundled_municipality};
use geolith::domain::presets::{default_dle, default_site, scenario_preset};
use geolith::domain::{Catalog, Commodity, EconomicSettings, Municipality, Scenario, Sector, TechKind, TimeSeries};
use geolith::esom::{
    account, aggregation_attributes, build_model, ModelInput, ModelMode, SolvedSystem, Step, TimeGrid,
};
use geolith::geothermal::{enumerate_depth_options, DepthOption};
use geolith::tsagg::{aggregate, TypicalPeriods};
use geolith_lp::{LpBackend, SimplexBackend};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bruchsal() -> &'static Municipality {
    static M: OnceLock<Municipality> = OnceLock::new();
    M.get_or_init(|| bundled_municipality("bruchsal_like").expect("bundled dataset loads"))
}

/// The bundled catalog restricted to `names`.
pub fn catalog(names: &[&str]) -> Catalog {
    let mut c = bundled_catalog().expect("bundled catalog loads");
    c.technologies.retain(|t| names.contains(&t.name.as_str()));
    assert_eq!(c.technologies.len(), names.len(), "unknown technology in {names:?}");
    c
}

/// A municipality whose series live in the grid handed to the model.
pub fn toy_municipality(catalog: Catalog) -> Municipality {
    Municipality {
        name: "toy".into(),
        sectors: vec![Sector::Households],
        demand: BTreeMap::new(),
        profiles: BTreeMap::new(),
        potentials: BTreeMap::new(),
        existing: BTreeMap::new(),
        site: default_site(),
        dle: default_dle(),
        catalog,
    }
}

/// Periods of `durations.len()` steps each with the given per-period day
/// weights.
pub fn grid(period_days: &[f64], durations: &[f64]) -> TimeGrid {
    let mut steps = Vec::new();
    let mut periods = Vec::new();
    for (p, &days) in period_days.iter().enumerate() {
        let start = steps.len();
        for (s, &d) in durations.iter().enumerate() {
            steps.push(Step {
                period: p,
                segment: s,
                weight: days * d,
                duration: d,
            });
        }
        periods.push(start..steps.len());
    }
    TimeGrid {
        steps,
        periods,
        demand: BTreeMap::new(),
        availability: BTreeMap::new(),
    }
}

pub fn solve(
    muni: &Municipality,
    grid: &TimeGrid,
    depth: Option<&DepthOption>,
    dle_enabled: bool,
) -> Result<SolvedSystem, geolith::esom::EsomError> {
    let econ = EconomicSettings::default();
    let input = ModelInput {
        municipality: muni,
        site: &muni.site,
        dle: &muni.dle,
        econ: &econ,
        grid,
        dle_enabled,
    };
    let bm = build_model(&input, depth, ModelMode::Invest)?;
    let sol = SimplexBackend::default().solve(&bm.lp, None)?;
    account(&sol, &bm, &muni.name, "toy", dle_enabled)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

pub fn weighted_demand(grid: &TimeGrid, c: Commodity) -> f64 {
    grid.demand[&c].iter().zip(&grid.steps).map(|(d, s)| d * s.weight).sum()
}

pub const HEAT: [Commodity; 2] = [Commodity::HeatLow, Commodity::ProcessHeatLow];

pub struct Solved {
    pub system: SolvedSystem,
    pub grid: TimeGrid,
    pub muni: Municipality,
    pub tp: TypicalPeriods,
}

pub fn scaled(muni: &Municipality, demand: f64) -> Municipality {
    let mut m = muni.clone();
    for ts in m.demand.values_mut() {
        *ts = TimeSeries::kw(ts.values().iter().map(|v| v * demand).collect()).unwrap();
    }
    m
}

/// Solves at the given depth index (`None`: no plant) on a coarse
/// aggregation.
pub fn solve_preset(muni: Municipality, scenario: &str, np: usize, ns: usize, depth: Option<usize>, dle: bool) -> Solved {
    solve_scenario(muni, &scenario_preset(scenario).unwrap(), np, ns, depth, dle)
}

pub fn solve_scenario(muni: Municipality, scenario: &Scenario, np: usize, ns: usize, depth: Option<usize>, dle: bool) -> Solved {
    let tp = aggregate(&aggregation_attributes(&muni), np, ns).unwrap();
    let grid = TimeGrid::from_aggregation(&tp);
    let (site, dle_params) = scenario.apply(&muni.site, &muni.dle).unwrap();
    let econ = EconomicSettings::default();
    let options = enumerate_depth_options(&site).unwrap();
    let option = depth.map(|k| options[k % options.len()]);
    let input = ModelInput {
        municipality: &muni,
        site: &site,
        dle: &dle_params,
        econ: &econ,
        grid: &grid,
        dle_enabled: dle,
    };
    let bm = build_model(&input, option.as_ref(), ModelMode::Invest).unwrap();
    let sol = SimplexBackend::default().solve(&bm.lp, None).unwrap();
    let system = account(&sol, &bm, &muni.name, &scenario.name, dle).unwrap();
    Solved {
        system,
        grid,
        muni,
        tp,
    }
}

pub fn series(s: &SolvedSystem, name: &str) -> Vec<f64> {
    s.dispatch.get(name).map(|p| p.iter().flatten().copied().collect()).unwrap_or_default()
}

/// Supply minus use per step for a group of commodities, from the reported
/// dispatch and the catalog conversion factors.
pub fn residuals(sv: &Solved, group: &[Commodity]) -> Vec<f64> {
    let s = &sv.system;
    let n = sv.grid.len();
    let mut r = vec![0.0; n];
    for c in group {
        if let Some(d) = sv.grid.demand.get(c) {
            for t in 0..n {
                r[t] -= d[t];
            }
        }
    }
    for tech in sv.muni.technologies() {
        if tech.kind == TechKind::Storage {
            let st = tech.storage.as_ref().unwrap();
            if group.contains(&st.commodity) {
                let dis = series(s, &format!("{}:discharge", tech.name));
                let ch = series(s, &format!("{}:charge", tech.name));
                for t in 0..n {
                    r[t] += dis[t] - ch[t];
                }
            }
            continue;
        }
        let f: f64 = group.iter().filter_map(|c| tech.io.get(c)).sum();
        if f != 0.0 {
            let a = series(s, &tech.name);
            for t in 0..n {
                r[t] += f * a[t];
            }
        }
    }
    if group.contains(&Commodity::Electricity) {
        for (t, v) in series(s, "geothermal_orc").iter().enumerate() {
            r[t] += v;
        }
    }
    if group == HEAT {
        for (t, v) in series(s, "geothermal_dhp").iter().enumerate() {
            r[t] += v;
        }
    }
    r
}

pub fn scenario_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["worst", "baseline", "optimistic", "best", "mean_urg"])
}

pub fn random_series(seed: u64, n_attrs: usize) -> BTreeMap<String, Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_attrs)
        .map(|a| {
            let base = rng.random_range(0.0..100.0);
            let v = (0..8760)
                .map(|h| {
                    let daily = ((h % 24) as f64 / 24.0 * std::f64::consts::TAU).sin();
                    (base + 20.0 * daily + rng.random_range(0.0..30.0)).max(0.0)
                })
                .collect();
            (format!("a{a}"), v)
        })
        .collect()
}
