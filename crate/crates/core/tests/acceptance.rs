//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! `cargo test -p geolith --test acceptance`

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{bruchsal, close, random_series, residuals, scenario_name, series, solve_preset, HEAT};
use geolith::dle::{annualize, battery_packs, co2_abatement, lithium_rate, ImpactFactors};
use geolith::domain::presets::{default_site, scenario_preset, urg_basin};
use geolith::domain::{Commodity, TechKind};
use geolith::esom::BendersOptions;
use geolith::geothermal::{dhp_heat, drilling_cost, site_wellhead_temperature, wellhead_temperature};
use geolith::runner::export::{breakdown_csv, dispatch_csv, summary_csv};
use geolith::runner::{full_resolution_check, run_scenario, RunOptions, ScenarioRun};
use geolith::tsagg::{aggregate_with, AggregateOptions, Representation};
use geolith_lp::{solve, LpModel, Sense, SimplexBackend, SolveOptions, Status};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: u32, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn temperature(r: &mut Report) {
    let basin = urg_basin();
    let (t, dt) = timed(|| wellhead_temperature(2470.0, &basin).unwrap());
    r.line(
        1,
        (t - 122.67).abs() <= 0.5 && dt < Duration::from_millis(1),
        format!("T(2470 m) = {t:.3} °C, target 122.67 ± 0.5, {dt:?}"),
    );
}

fn drilling(r: &mut Report) {
    let (c, dt) = timed(|| drilling_cost(2470.0, 1887.0, 0.9));
    r.line(
        2,
        rel(c, 11.40e6) <= 0.01 && dt < Duration::from_millis(1),
        format!("doublet cost = {:.3} M€, target 11.40 ± 1%, {dt:?}", c / 1e6),
    );
}

fn dhp(r: &mut Report) {
    let site = default_site();
    let q = dhp_heat(24.0, site.brine_density, site.brine_heat_capacity, 123.0, 50.0, 0.65, 50.0).unwrap();
    r.line(
        3,
        rel(q, 4663.0) <= 0.005,
        format!("DHP heat = {:.4} MW_th (rho {}, cp {}), target 4.663 ± 0.5%", q / 1e3, site.brine_density, site.brine_heat_capacity),
    );
}

fn lithium(r: &mut Report) {
    let (_, carbonate) = annualize(lithium_rate(24.0, 159.0, 0.7).unwrap(), 8760.0).unwrap();
    r.line(4, rel(carbonate, 448.5) <= 0.01, format!("{carbonate:.2} t Li2CO3/a, target 448.5 ± 1%"));
}

fn packs(r: &mut Report) {
    let f = ImpactFactors::default();
    let big = battery_packs(510e3, &f).unwrap();
    let small = battery_packs(50e3, &f).unwrap();
    let pass = rel(big.packs, 11.97e6) <= 0.01
        && rel(small.packs, 1.174e6) <= 0.01
        && rel(small.registration_share, 0.69) <= 0.01;
    r.line(
        5,
        pass,
        format!(
            "510 kt -> {:.3} M packs (11.97), 50 kt -> {:.4} M packs (1.174), share {:.4} (0.69), all ± 1%",
            big.packs / 1e6,
            small.packs / 1e6,
            small.registration_share
        ),
    );
}

fn co2(r: &mut Report) {
    let t = co2_abatement(50_633.0, &ImpactFactors::default()).unwrap();
    r.line(6, rel(t, 800e3) <= 0.01, format!("{:.1} kt CO2eq/a, target 800 ± 1%", t / 1e3));
}

fn aggregation_error(r: &mut Report, baseline: &ScenarioRun, opts: &RunOptions) {
    let muni = bruchsal();
    let scenario = scenario_preset("baseline").unwrap();
    let (full, dt) = timed(|| {
        full_resolution_check(muni, &scenario, baseline, opts, &BendersOptions::default(), &SimplexBackend::default())
    });
    let total = dt + baseline.elapsed;
    match full {
        Ok(full) => {
            let d = (baseline.system.tac - full.tac) / full.tac;
            r.line(
                7,
                d.abs() <= 0.01 && full.converged && total <= Duration::from_secs(600),
                format!(
                    "aggregated {:.4} M€ vs hourly {:.4} M€: {:+.3}%, converged {}, unserved {:.3e} kWh, {:.1} s",
                    baseline.system.tac / 1e6,
                    full.tac / 1e6,
                    100.0 * d,
                    full.converged,
                    full.unserved_energy,
                    total.as_secs_f64()
                ),
            );
        }
        Err(e) => r.line(7, false, format!("hourly solve failed: {e}")),
    }
}

fn ordering(r: &mut Report, runs: &[(&str, Result<ScenarioRun, String>)]) {
    let get = |k: &str| runs.iter().find(|(n, _)| *n == k).and_then(|(_, v)| v.as_ref().ok()).map(|x| &x.system);
    let (Some(worst), Some(base), Some(base_nd), Some(opt), Some(best)) =
        (get("worst"), get("baseline"), get("baseline_no_dle"), get("optimistic"), get("best"))
    else {
        let errs: Vec<String> = runs.iter().filter_map(|(n, v)| v.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
        r.line(8, false, format!("runs failed: {}", errs.join("; ")));
        return;
    };
    let dhp_only = |s: &geolith::esom::SolvedSystem| s.dhp_capacity() > 0.0 && s.orc_capacity() <= 1e-6;
    let checks = [
        ("worst without plant", !worst.has_geothermal()),
        ("worst = baseline without lithium", close(worst.tac, base_nd.tac, 1e-6)),
        ("baseline DHP only", dhp_only(base)),
        ("optimistic DHP only", dhp_only(opt)),
        ("best builds ORC", best.orc_capacity() > 0.0),
        ("best TAC < 0", best.tac < 0.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let tacs = format!(
        "TAC M€ worst {:.3}, baseline {:.3}, baseline w/o lithium {:.3}, optimistic {:.3}, best {:.3}; \
         DHP/ORC MW baseline {:.2}/{:.2}, optimistic {:.2}/{:.2}, best {:.2}/{:.2}",
        worst.tac / 1e6,
        base.tac / 1e6,
        base_nd.tac / 1e6,
        opt.tac / 1e6,
        best.tac / 1e6,
        base.dhp_capacity() / 1e3,
        base.orc_capacity() / 1e3,
        opt.dhp_capacity() / 1e3,
        opt.orc_capacity() / 1e3,
        best.dhp_capacity() / 1e3,
        best.orc_capacity() / 1e3,
    );
    if failed.is_empty() {
        r.line(8, true, tacs);
    } else {
        r.line(8, false, format!("violated: {}; {tacs}", failed.join(", ")));
    }
}

struct Dense {
    a: Vec<Vec<f64>>,
    senses: Vec<Sense>,
    b: Vec<f64>,
    c: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn random_lp(rng: &mut ChaCha8Rng) -> Dense {
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=6);
    let a = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-5..=5) as f64 })
                .collect()
        })
        .collect();
    let senses = (0..m)
        .map(|_| match rng.random_range(0..5) {
            0 => Sense::Eq,
            1 | 2 => Sense::Ge,
            _ => Sense::Le,
        })
        .collect();
    let b = (0..m).map(|_| rng.random_range(-10..=20) as f64).collect();
    let c = (0..n).map(|_| rng.random_range(-6..=6) as f64).collect();
    let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=1) as f64).collect();
    let hi = lo.iter().map(|&l| l + rng.random_range(0..=8) as f64).collect();
    Dense { a, senses, b, c, lo, hi }
}

fn to_model(d: &Dense) -> LpModel {
    let mut m = LpModel::new("random");
    let vars: Vec<_> = (0..d.c.len()).map(|j| m.add_var(format!("x{j}"), d.lo[j], d.hi[j], d.c[j])).collect();
    for (i, row) in d.a.iter().enumerate() {
        let terms: Vec<_> = row.iter().enumerate().map(|(j, &v)| (vars[j], v)).collect();
        m.add_constraint(format!("r{i}"), terms, d.senses[i], d.b[i]);
    }
    m
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn feasible(d: &Dense, x: &[f64]) -> bool {
    let tol = 1e-9;
    let inside = x.iter().enumerate().all(|(j, &v)| v >= d.lo[j] - tol && v <= d.hi[j] + tol);
    inside
        && d.a.iter().zip(&d.senses).zip(&d.b).all(|((row, s), &b)| {
            let act: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
            match s {
                Sense::Le => act <= b + tol,
                Sense::Ge => act >= b - tol,
                Sense::Eq => (act - b).abs() <= tol,
            }
        })
}

/// Minimum of `c·x` over every vertex of the boxed polytope: each choice of
/// `n` linearly independent hyperplanes among rows and bounds. `None` when
/// no vertex is feasible, which for a box means the LP is infeasible.
fn enumerate(d: &Dense) -> Option<f64> {
    let n = d.c.len();
    let mut hyper: Vec<(Vec<f64>, f64)> = d.a.iter().cloned().zip(d.b.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        hyper.push((e.clone(), d.lo[j]));
        hyper.push((e, d.hi[j]));
    }
    let k = hyper.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| hyper[i].0.clone()).collect();
        let b = idx.iter().map(|&i| hyper[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(d, &x) {
                let v: f64 = d.c.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        let mut i = n;
        while i > 0 && idx[i - 1] == k - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for t in i..n {
            idx[t] = idx[t - 1] + 1;
        }
    }
    best
}

fn lp_oracle(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let start = Instant::now();
    let mut solver_time = Duration::ZERO;
    let mut bad = Vec::new();
    let (mut optimal, mut infeasible) = (0, 0);
    for case in 0..200 {
        let d = random_lp(&mut rng);
        let model = to_model(&d);
        let (sol, dt) = timed(|| solve(&model, &SolveOptions::default(), None));
        solver_time += dt;
        let Ok(sol) = sol else {
            bad.push(format!("case {case}: solver error"));
            continue;
        };
        match enumerate(&d) {
            Some(best) => {
                optimal += 1;
                if sol.status != Status::Optimal || (sol.objective - best).abs() > 1e-6 * best.abs().max(1.0) {
                    bad.push(format!("case {case}: {:?} {} vs {best}", sol.status, sol.objective));
                }
            }
            None => {
                infeasible += 1;
                if sol.status != Status::Infeasible {
                    bad.push(format!("case {case}: {:?} on an empty polytope", sol.status));
                }
            }
        }
    }
    let total = start.elapsed();
    r.line(
        9,
        bad.is_empty() && total < Duration::from_secs(30),
        format!(
            "200 LPs ({optimal} optimal, {infeasible} infeasible), {} mismatches, solver {:.3} s, with enumeration {:.2} s{}",
            bad.len(),
            solver_time.as_secs_f64(),
            total.as_secs_f64(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn balance() -> Result<(), String> {
    let s = (scenario_name(), 2usize..6, 2usize..6, prop::option::of(0usize..400), any::<bool>());
    check(6, s, |(scenario, np, ns, depth, dle)| {
        let sv = solve_preset(bruchsal().clone(), scenario, np, ns, depth, dle);
        let mut groups: Vec<Vec<Commodity>> =
            Commodity::BALANCED.iter().filter(|c| !HEAT.contains(c)).map(|c| vec![*c]).collect();
        groups.push(HEAT.to_vec());
        for g in groups {
            let scale = g.iter().filter_map(|c| sv.grid.demand.get(c)).flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            for r in residuals(&sv, &g) {
                prop_assert!(r.abs() <= 1e-6 * scale, "{g:?}: residual {r}");
            }
        }
        Ok(())
    })
}

fn cyclicity() -> Result<(), String> {
    let s = (scenario_name(), 2usize..6, 2usize..8, prop::option::of(0usize..400));
    check(6, s, |(scenario, np, ns, depth)| {
        let sv = solve_preset(bruchsal().clone(), scenario, np, ns, depth, true);
        let s = &sv.system;
        for tech in sv.muni.technologies().iter().filter(|t| t.kind == TechKind::Storage) {
            let st = tech.storage.as_ref().unwrap();
            let soc = &s.storage_soc[&tech.name];
            let dis = &s.dispatch[&format!("{}:discharge", tech.name)];
            let ch = &s.dispatch[&format!("{}:charge", tech.name)];
            let cap = s.capacity(&tech.name).max(1.0);
            for p in 0..np {
                let k = soc[p].len();
                let mut e = soc[p][k - 1];
                for seg in 0..k {
                    let d = sv.tp.segment_durations[p][seg] as f64;
                    e = e * (1.0 - st.self_discharge).powf(d) + d * st.charge_efficiency * ch[p][seg]
                        - d * dis[p][seg] / st.discharge_efficiency;
                    prop_assert!((e - soc[p][seg]).abs() <= 1e-6 * cap);
                }
            }
        }
        Ok(())
    })
}

fn cascade() -> Result<(), String> {
    let s = (scenario_name(), 2usize..6, 2usize..6, 0usize..400, any::<bool>());
    check(6, s, |(scenario, np, ns, depth, dle)| {
        let sv = solve_preset(bruchsal().clone(), scenario, np, ns, Some(depth), dle);
        let s = &sv.system;
        let Some(g) = &s.geothermal else { return Ok(()) };
        let (site, _) = scenario_preset(scenario).unwrap().apply(&sv.muni.site, &sv.muni.dle).unwrap();
        let eta = site.efficiencies;
        let (orc, dhp, phi) = (series(s, "geothermal_orc"), series(s, "geothermal_dhp"), series(s, "geothermal_brine"));
        let tol = 1e-6 * g.max_thermal_power.max(1.0);
        for t in 0..orc.len() {
            prop_assert!(orc[t] / eta.el + dhp[t] / eta.th <= phi[t] * g.max_thermal_power + tol);
        }
        Ok(())
    })
}

fn conservation() -> Result<(), String> {
    check(20, (any::<u64>(), 1usize..=40, 1usize..=24, any::<bool>()), |(seed, np, ns, centroid)| {
        let s = random_series(seed, 3);
        let opts = AggregateOptions {
            representation: if centroid { Representation::Centroid } else { Representation::Medoid },
            pin_peak_of: None,
        };
        let tp = aggregate_with(&s, np, ns, &opts).unwrap();
        prop_assert_eq!(tp.period_weights.iter().sum::<u32>(), 365);
        for (name, v) in &s {
            prop_assert!(close(tp.annual_sum(name).unwrap(), v.iter().sum(), 1e-9));
        }
        Ok(())
    })
}

fn monotonicity() -> Result<(), String> {
    let site = default_site();
    check(200, (0.0f64..5000.0, 0.0f64..5000.0), |(a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(site_wellhead_temperature(lo, &site).unwrap() <= site_wellhead_temperature(hi, &site).unwrap());
        prop_assert!(drilling_cost(lo, 1887.0, 0.9) <= drilling_cost(hi, 1887.0, 0.9));
        Ok(())
    })?;
    check(200, (0.0f64..150.0, 0.0f64..300.0, 0.0f64..1.0, 0.0f64..4.0), |(flow, c, eta, k)| {
        let out = |f: f64| annualize(lithium_rate(f, c, eta).unwrap(), 8760.0).unwrap().1;
        prop_assert!(close(out(k * flow), k * out(flow), 1e-12));
        Ok(())
    })
}

fn determinism() -> Result<(), String> {
    check(3, (scenario_name(), prop::option::of(0usize..400)), |(scenario, depth)| {
        let a = solve_preset(bruchsal().clone(), scenario, 4, 4, depth, true);
        let b = solve_preset(bruchsal().clone(), scenario, 4, 4, depth, true);
        prop_assert_eq!(&a.system, &b.system);
        prop_assert_eq!(summary_csv(&[&a.system]), summary_csv(&[&b.system]));
        prop_assert_eq!(breakdown_csv(&a.system), breakdown_csv(&b.system));
        prop_assert_eq!(dispatch_csv(&a.system, &a.tp).unwrap(), dispatch_csv(&b.system, &b.tp).unwrap());
        Ok(())
    })
}

fn properties(r: &mut Report) {
    let suites: [(&str, fn() -> Result<(), String>); 6] = [
        ("balance", balance),
        ("cyclicity", cyclicity),
        ("cascade", cascade),
        ("conservation", conservation),
        ("monotonicity", monotonicity),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in suites {
        if let Err(e) = f() {
            failed.push(format!("{name}: {e}"));
        }
    }
    let names: Vec<&str> = suites.iter().map(|s| s.0).collect();
    if failed.is_empty() {
        r.line(10, true, format!("{} hold", names.join(", ")));
    } else {
        r.line(10, false, failed.join("; "));
    }
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    temperature(&mut r);
    drilling(&mut r);
    dhp(&mut r);
    lithium(&mut r);
    packs(&mut r);
    co2(&mut r);

    let muni = bruchsal();
    let backend = SimplexBackend::default();
    let opts = RunOptions::default();
    let no_dle = RunOptions {
        dle_enabled: false,
        ..RunOptions::default()
    };
    let runs: Vec<(&str, Result<ScenarioRun, String>)> = [
        ("worst", "worst", &opts),
        ("baseline", "baseline", &opts),
        ("baseline_no_dle", "baseline", &no_dle),
        ("optimistic", "optimistic", &opts),
        ("best", "best", &opts),
    ]
    .into_iter()
    .map(|(key, preset, o)| {
        let run = run_scenario(muni, &scenario_preset(preset).unwrap(), o, &backend).map_err(|e| e.to_string());
        (key, run)
    })
    .collect();
    match &runs[1].1 {
        Ok(base) => aggregation_error(&mut r, base, &opts),
        Err(e) => r.line(7, false, format!("aggregated run failed: {e}")),
    }
    ordering(&mut r, &runs);
    lp_oracle(&mut r);
    properties(&mut r);

    println!("{} of 10 criteria passed", 10 - r.failed);
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
