//! Optimization results checked against closed forms and brute force.

mod common;

use common::{bruchsal, catalog, close, grid, solve, toy_municipality, weighted_demand};
use geolith::domain::presets::scenario_preset;
use geolith::domain::{Commodity, EconomicSettings};
use geolith::esom::{
    account, build_model, optimize_with_geothermal, plan_from_capacities, solve_full_resolution, BendersOptions,
    ModelInput, ModelMode, SweepMode, SweepOptions, TimeGrid,
};
use geolith::geothermal::enumerate_depth_options;
use geolith::tsagg::aggregate;
use geolith_lp::{LpBackend, SimplexBackend};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn crf(i: f64, n: f64) -> f64 {
    i / (1.0 - (1.0 + i).powf(-n))
}

#[test]
fn single_source_pays_its_price_for_every_unit() {
    let muni = toy_municipality(catalog(&["electricity_import"]));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut g = grid(&[200.0, 165.0], &[6.0, 12.0, 6.0]);
    g.demand
        .insert(Commodity::Electricity, (0..6).map(|_| rng.random_range(0.0..5000.0)).collect());
    let s = solve(&muni, &g, None, false).unwrap();
    let price = muni.catalog.technologies[0].variable_opex;
    let expected = price * weighted_demand(&g, Commodity::Electricity);
    assert!(close(s.tac, expected, 1e-9), "{} vs {expected}", s.tac);
    assert!(close(s.annual_energy["electricity_import"], weighted_demand(&g, Commodity::Electricity), 1e-9));
}

#[test]
fn zero_demand_costs_only_the_existing_plant() {
    let mut muni = toy_municipality(catalog(&["electricity_import", "pv_rooftop", "heat_pump"]));
    muni.existing.insert("pv_rooftop".into(), 100.0);
    let mut g = grid(&[365.0], &[24.0]);
    g.demand.insert(Commodity::Electricity, vec![0.0]);
    g.availability.insert("pv".into(), vec![0.3]);
    let s = solve(&muni, &g, None, false).unwrap();
    let pv = muni.catalog.get("pv_rooftop").unwrap();
    let expected = 100.0 * pv.capex_per_unit * pv.fixed_opex_share;
    assert!(close(s.tac, expected, 1e-9), "{} vs {expected}", s.tac);
    assert_eq!(s.capacity("heat_pump"), 0.0);
    assert_eq!(s.capacity("pv_rooftop"), 100.0);
}

/// PV plus imports: the cost of a PV capacity `k` is convex and piecewise
/// linear with kinks where `k` covers the demand of one step, so the
/// optimum is among those kinks.
#[test]
fn pv_and_import_match_the_breakpoint_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut muni = toy_municipality(catalog(&["electricity_import", "pv_rooftop"]));
        muni.existing.insert("pv_rooftop".into(), 0.0);
        let n_seg = rng.random_range(1..=6);
        let durations: Vec<f64> = (0..n_seg).map(|_| rng.random_range(1..=6) as f64).collect();
        let days: Vec<f64> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(1..=100) as f64).collect();
        let mut g = grid(&days, &durations);
        let n = g.steps.len();
        let demand: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1000.0)).collect();
        let avail: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        g.demand.insert(Commodity::Electricity, demand.clone());
        g.availability.insert("pv".into(), avail.clone());

        let pv = muni.catalog.get("pv_rooftop").unwrap().clone();
        let price = muni.catalog.get("electricity_import").unwrap().variable_opex;
        let i = EconomicSettings::default().interest_rate;
        let unit = pv.capex_per_unit * (crf(i, pv.economic_lifetime) + pv.fixed_opex_share);
        let cost = |k: f64| {
            unit * k
                + price
                    * (0..n)
                        .map(|t| g.steps[t].weight * (demand[t] - avail[t] * k).max(0.0))
                        .sum::<f64>()
        };
        let cap = pv.capacity_max_or_inf();
        let best = std::iter::once(0.0)
            .chain((0..n).filter(|&t| avail[t] > 0.0).map(|t| demand[t] / avail[t]))
            .map(|k| k.min(cap))
            .map(cost)
            .fold(f64::INFINITY, f64::min);

        let s = solve(&muni, &g, None, false).unwrap();
        assert!(close(s.tac, best, 1e-7), "lp {} oracle {best}", s.tac);
        assert!(close(cost(s.capacity("pv_rooftop")), best, 1e-7));
    }
}

#[test]
fn unsuppliable_demand_is_reported_before_solving() {
    let muni = toy_municipality(catalog(&["electricity_import"]));
    let mut g = grid(&[365.0], &[24.0]);
    g.demand.insert(Commodity::HeatLow, vec![10.0]);
    let e = solve(&muni, &g, None, false).unwrap_err();
    assert!(e.is_infeasible(), "{e}");
    // the plant's heat makes the same demand suppliable
    let site = &muni.site;
    let option = enumerate_depth_options(site).unwrap().into_iter().find(|o| o.depth == 3000.0).unwrap();
    assert!(solve(&muni, &g, Some(&option), false).is_ok());
}

fn input_parts(scenario: &str) -> (geolith::domain::GeothermalSiteParams, geolith::domain::DleParams) {
    let m = bruchsal();
    scenario_preset(scenario).unwrap().apply(&m.site, &m.dle).unwrap()
}

/// On a few raw days the decomposition must reach the optimum of the
/// monolithic model over the same days.
#[test]
fn decomposition_matches_the_monolithic_model() {
    let m = bruchsal();
    let (site, dle) = input_parts("baseline");
    let econ = EconomicSettings::default();
    let days = 40..43;
    let g = TimeGrid::hourly(m, days.clone());
    let input = ModelInput {
        municipality: m,
        site: &site,
        dle: &dle,
        econ: &econ,
        grid: &g,
        dle_enabled: true,
    };
    let option = enumerate_depth_options(&site).unwrap().into_iter().find(|o| o.depth == 2670.0).unwrap();
    let backend = SimplexBackend::default();
    let bm = build_model(&input, Some(&option), ModelMode::Invest).unwrap();
    let sol = backend.solve(&bm.lp, None).unwrap();
    let mono = account(&sol, &bm, &m.name, "baseline", true).unwrap();

    // start from a poor plan: nothing beyond the existing capacities
    let start = plan_from_capacities(&input, &Default::default(), 0.0);
    let opts = BendersOptions {
        days: Some(days),
        rel_gap: 1e-6,
        ..Default::default()
    };
    let full = solve_full_resolution(&input, Some(&option), &start, &backend, &opts).unwrap();
    assert!(full.converged);
    assert!(close(full.tac, mono.tac, 1e-5), "decomposed {} monolithic {}", full.tac, mono.tac);
    assert!(full.lower_bound <= full.tac + 1e-6 * full.tac.abs());
    assert!(full.unserved_energy < 1e-3);
}

#[test]
fn branch_and_bound_finds_the_exhaustive_optimum() {
    let m = bruchsal();
    let tp = aggregate(&geolith::esom::aggregation_attributes(m), 4, 4).unwrap();
    let g = TimeGrid::from_aggregation(&tp);
    let econ = EconomicSettings::default();
    for scenario in ["baseline", "best"] {
        let (site, dle) = input_parts(scenario);
        let input = ModelInput {
            municipality: m,
            site: &site,
            dle: &dle,
            econ: &econ,
            grid: &g,
            dle_enabled: true,
        };
        let backend = SimplexBackend::default();
        let run = |mode| {
            optimize_with_geothermal(
                &input,
                scenario,
                &backend,
                &SweepOptions {
                    mode,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let bb = run(SweepMode::BranchAndBound);
        let ex = run(SweepMode::Exhaustive);
        assert!(close(bb.best.tac, ex.best.tac, 1e-7), "{scenario}: {} vs {}", bb.best.tac, ex.best.tac);
        assert!(bb.lp_solves < ex.lp_solves);
        let min = ex.evaluated.iter().map(|e| e.total_cost).fold(ex.no_plant_cost, f64::min);
        assert!(close(ex.best.tac, min, 1e-7));
    }
}
