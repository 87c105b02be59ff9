//! Result files. Every writer has a fixed column order and formats numbers
//! with the shortest round-trip representation, so equal results give
//! byte-identical files.
//!
//! | file | columns |
//! |---|---|
//! | summary | municipality, scenario, dle_enabled, tac_eur, depth_m, wellhead_temperature_c, orc_kw, dhp_kw, dle_build, li2co3_t, orc_generation_kwh, dhp_generation_kwh |
//! | breakdown | component, capex_annuity_eur, fixed_opex_eur, variable_opex_eur, revenue_eur, tac_eur |
//! | dispatch | component, period, segment, weight_days, duration_h, power_kw |
//! | fig4 | scenario, dle_enabled, component, capacity_kw |
//! | fig5 | parameter, value, tac_eur, dhp_generation_kwh, orc_generation_kwh, li2co3_t, depth_m, error |
//! | fig6 | municipality, tac_without_eur, tac_with_eur, cost_decrease_pct, li2co3_t |
//! | fig7 | share, orc_MW_cum, dhp_MW_cum, li2co3_t_cum |
//!
//! Missing values are empty fields; an undefined cost decrease is written
//! as `undefined`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Comparison, FleetResult, RunError, ScenarioRun, SensitivityParameter, SensitivityRow, Stage};
use crate::esom::SolvedSystem;
use crate::tsagg::TypicalPeriods;

/// Everything one command produced, as a JSON document.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    #[serde(default)]
    pub runs: Vec<ScenarioRun>,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
    #[serde(default)]
    pub sensitivity: Option<SensitivityTable>,
    #[serde(default)]
    pub fleet: Option<FleetResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub parameter: SensitivityParameter,
    pub rows: Vec<SensitivityRow>,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn table<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing to memory cannot fail.
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>()).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of strings is utf-8")
}

pub fn summary_csv(systems: &[&SolvedSystem]) -> String {
    let header = [
        "municipality",
        "scenario",
        "dle_enabled",
        "tac_eur",
        "depth_m",
        "wellhead_temperature_c",
        "orc_kw",
        "dhp_kw",
        "dle_build",
        "li2co3_t",
        "orc_generation_kwh",
        "dhp_generation_kwh",
    ];
    table(
        &header,
        systems.iter().map(|s| {
            let g = s.geothermal.as_ref();
            vec![
                s.municipality.clone(),
                s.scenario.clone(),
                s.dle_enabled.to_string(),
                num(s.tac),
                opt(g.map(|g| g.depth)),
                opt(g.map(|g| g.wellhead_temperature)),
                num(s.orc_capacity()),
                num(s.dhp_capacity()),
                num(g.map_or(0.0, |g| g.dle_build)),
                num(s.lithium.annual_carbonate),
                num(g.map_or(0.0, |g| g.orc_generation)),
                num(g.map_or(0.0, |g| g.dhp_generation)),
            ]
        }),
    )
}

/// One row per cost item; the `tac_eur` column sums to the system TAC.
pub fn breakdown_csv(s: &SolvedSystem) -> String {
    let header = [
        "component",
        "capex_annuity_eur",
        "fixed_opex_eur",
        "variable_opex_eur",
        "revenue_eur",
        "tac_eur",
    ];
    table(
        &header,
        s.breakdown.iter().map(|c| {
            vec![
                c.component.clone(),
                num(c.capex_annuity),
                num(c.fixed_opex),
                num(c.variable_opex),
                num(c.revenue),
                num(c.total()),
            ]
        }),
    )
}

/// Long format over the aggregated time steps.
pub fn dispatch_csv(s: &SolvedSystem, tp: &TypicalPeriods) -> Result<String, RunError> {
    let header = ["component", "period", "segment", "weight_days", "duration_h", "power_kw"];
    let mut rows = Vec::new();
    for (name, periods) in &s.dispatch {
        if periods.len() != tp.n_periods {
            return Err(RunError::validation(
                Stage::Export,
                format!("dispatch of `{name}` has {} periods, the aggregation {}", periods.len(), tp.n_periods),
            ));
        }
        for (p, segs) in periods.iter().enumerate() {
            for (k, v) in segs.iter().enumerate() {
                let duration = tp.segment_durations[p].get(k).ok_or_else(|| {
                    RunError::validation(Stage::Export, format!("dispatch of `{name}` has too many segments"))
                })?;
                rows.push(vec![
                    name.clone(),
                    p.to_string(),
                    k.to_string(),
                    tp.period_weights[p].to_string(),
                    duration.to_string(),
                    num(*v),
                ]);
            }
        }
    }
    Ok(table(&header, rows))
}

/// Installed capacities per run.
pub fn fig4_csv(systems: &[&SolvedSystem]) -> String {
    let rows = systems.iter().flat_map(|s| {
        s.capacities
            .iter()
            .map(|(c, v)| vec![s.scenario.clone(), s.dle_enabled.to_string(), c.clone(), num(*v)])
    });
    table(&["scenario", "dle_enabled", "component", "capacity_kw"], rows)
}

pub fn fig5_csv(t: &SensitivityTable) -> String {
    let header = [
        "parameter",
        "value",
        "tac_eur",
        "dhp_generation_kwh",
        "orc_generation_kwh",
        "li2co3_t",
        "depth_m",
        "error",
    ];
    table(
        &header,
        t.rows.iter().map(|r| {
            vec![
                t.parameter.to_string(),
                num(r.value),
                opt(r.tac),
                num(r.dhp_generation),
                num(r.orc_generation),
                num(r.carbonate_t),
                opt(r.depth),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn fig6_csv(comparisons: &[Comparison]) -> String {
    let header = ["municipality", "tac_without_eur", "tac_with_eur", "cost_decrease_pct", "li2co3_t"];
    table(
        &header,
        comparisons.iter().map(|c| {
            vec![
                c.municipality.clone(),
                num(c.tac_without),
                num(c.tac_with),
                c.cost_decrease_pct.map_or_else(|| "undefined".to_string(), num),
                num(c.carbonate_t_with),
            ]
        }),
    )
}

pub fn fig7_csv(f: &FleetResult) -> String {
    table(
        &["share", "orc_MW_cum", "dhp_MW_cum", "li2co3_t_cum"],
        f.curve
            .iter()
            .map(|p| vec![num(p.share), num(p.orc_mw_cum), num(p.dhp_mw_cum), num(p.li2co3_t_cum)]),
    )
}

pub fn report_json(r: &Report) -> Result<String, RunError> {
    serde_json::to_string_pretty(r).map_err(|e| RunError::validation(Stage::Export, e.to_string()))
}

pub fn read_report(path: &Path) -> Result<Report, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::validation(Stage::Load, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::validation(Stage::Load, format!("{}: {e}", path.display())))
}

/// Writes `contents` to `dir/name`, creating `dir` as needed.
pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::validation(Stage::Export, format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| RunError::validation(Stage::Export, format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn file_stem(s: &SolvedSystem) -> String {
    let raw = format!("{}_{}_{}", s.municipality, s.scenario, if s.dle_enabled { "dle" } else { "nodle" });
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes every file the report has content for and returns the paths in
/// writing order.
pub fn write_report(dir: &Path, r: &Report) -> Result<Vec<PathBuf>, RunError> {
    let mut out = vec![write(dir, "report.json", &report_json(r)?)?];
    let mut systems: Vec<&SolvedSystem> = r.runs.iter().map(|run| &run.system).collect();
    if let Some(f) = &r.fleet {
        for e in &f.entries {
            systems.extend(e.with_dle.iter().chain(e.without_dle.iter()));
        }
    }
    if !systems.is_empty() {
        out.push(write(dir, "summary.csv", &summary_csv(&systems))?);
        out.push(write(dir, "fig4_capacities.csv", &fig4_csv(&systems))?);
    }
    for run in &r.runs {
        let stem = file_stem(&run.system);
        out.push(write(dir, &format!("breakdown_{stem}.csv"), &breakdown_csv(&run.system))?);
        out.push(write(dir, &format!("dispatch_{stem}.csv"), &dispatch_csv(&run.system, &run.aggregation)?)?);
    }
    if let Some(t) = &r.sensitivity {
        out.push(write(dir, "fig5_sensitivity.csv", &fig5_csv(t))?);
    }
    let mut comparisons = r.comparisons.clone();
    if let Some(f) = &r.fleet {
        for e in &f.entries {
            if let (Some(w), Some(wo)) = (&e.with_dle, &e.without_dle) {
                comparisons.push(super::compare(w, wo)?);
            }
        }
        out.push(write(dir, "fig7_fleet.csv", &fig7_csv(f))?);
    }
    if !comparisons.is_empty() {
        out.push(write(dir, "fig6_cost_decrease.csv", &fig6_csv(&comparisons))?);
    }
    Ok(out)
}
