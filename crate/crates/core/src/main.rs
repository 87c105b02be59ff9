use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use geolith::domain::loader::{bundled_catalog, bundled_municipality, load_municipality, save_municipality};
use geolith::domain::presets::{scenario_preset, sensitivity_base};
use geolith::domain::synth::SyntheticMunicipality;
use geolith::domain::{Municipality, Scenario};
use geolith::esom::{BendersOptions, SweepMode};
use geolith::runner::config::{pick, run_options, FileConfig, RunFlags};
use geolith::runner::export::{read_report, write_report, Report, SensitivityTable};
use geolith::runner::{
    compare, full_resolution_check, run_fleet, run_scenario, run_sensitivity, synthetic_fleet, FleetOrdering,
    RunError, RunOptions, SensitivityParameter, SensitivitySpec, Stage,
};
use geolith::tsagg::Representation;
use geolith_lp::SimplexBackend;

const DEFAULT_MUNICIPALITY: &str = "bundled:bruchsal_like";

/// Municipal energy systems with deep geothermal plants and lithium
/// extraction.
///
/// Settings come from the command line, then the `--config` file, then the
/// built-in defaults. Log verbosity is read from GEOLITH_LOG.
#[derive(Parser)]
#[command(name = "geolith", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Loads and checks a municipality and a scenario.
    Validate(Common),
    /// Optimizes one municipality in one scenario.
    Optimize(OptimizeArgs),
    /// One-at-a-time parameter sweep around the regional mean site.
    Sensitivity(SensitivityArgs),
    /// Runs many municipalities with and without lithium extraction.
    Fleet(FleetArgs),
    /// Writes the CSV files of a JSON report.
    Report(ReportArgs),
    /// Writes synthetic municipality datasets.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Municipality file, or `bundled:<name>`.
    #[arg(long)]
    municipality: Option<String>,
    /// Preset name (worst, baseline, optimistic, best, mean_urg) or scenario
    /// file.
    #[arg(long)]
    scenario: Option<String>,
    /// JSON settings file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    no_dle: bool,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    /// medoid or centroid
    #[arg(long, value_parser = parse_representation)]
    representation: Option<Representation>,
    /// Attribute whose peak day keeps a period of its own.
    #[arg(long)]
    pin_peak_of: Option<String>,
    #[arg(long)]
    interest_rate: Option<f64>,
    /// Solve every depth option instead of branch and bound.
    #[arg(long)]
    exhaustive: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunArgs,
    /// Also runs without lithium extraction and reports the differences.
    #[arg(long)]
    compare: bool,
    /// Re-optimizes the capacities on all 8760 hours at the chosen depth.
    #[arg(long)]
    full_resolution_check: bool,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_parser = |s: &str| s.parse::<SensitivityParameter>())]
    param: Option<SensitivityParameter>,
    /// Comma separated.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

#[derive(Args)]
struct FleetArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: RunArgs,
    /// Folder of municipality files.
    #[arg(long, conflicts_with = "synthetic")]
    dir: Option<PathBuf>,
    /// Generates this many synthetic municipalities instead.
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all available cores by default.
    #[arg(long)]
    jobs: Option<usize>,
    /// temperature (ties broken by ORC capacity) or orc
    #[arg(long, value_parser = |s: &str| s.parse::<FleetOrdering>())]
    ordering: Option<FleetOrdering>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report written by another subcommand.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Writes this many varied municipalities instead of the bundled one.
    #[arg(long)]
    fleet: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_representation(s: &str) -> Result<Representation, String> {
    match s {
        "medoid" => Ok(Representation::Medoid),
        "centroid" => Ok(Representation::Centroid),
        _ => Err(format!("unknown representation `{s}`")),
    }
}

fn load_config(common: &Common) -> Result<FileConfig, RunError> {
    common.config.as_deref().map_or(Ok(FileConfig::default()), FileConfig::load)
}

fn flags(run: &RunArgs) -> RunFlags {
    RunFlags {
        no_dle: run.no_dle,
        periods: run.periods,
        segments: run.segments,
        representation: run.representation,
        pin_peak_of: run.pin_peak_of.clone(),
        interest_rate: run.interest_rate,
        sweep_mode: run.exhaustive.then_some(SweepMode::Exhaustive),
    }
}

fn municipality(spec: &str) -> Result<Municipality, RunError> {
    let m = match spec.strip_prefix("bundled:") {
        Some(name) => bundled_municipality(name),
        None => load_municipality(Path::new(spec)),
    };
    m.map_err(|e| RunError::validation(Stage::Load, e.to_string()))
}

fn scenario(spec: &str) -> Result<Scenario, RunError> {
    if let Ok(s) = scenario_preset(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(RunError::validation(Stage::Scenario, format!("`{spec}` is neither a preset nor a file")));
    }
    let text = fs::read_to_string(path).map_err(|e| RunError::validation(Stage::Load, format!("{spec}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| RunError::validation(Stage::Load, format!("{spec}: {e}")))
}

fn selected(common: &Common, file: &FileConfig, default_scenario: &str) -> Result<(Municipality, Scenario), RunError> {
    let m = pick(common.municipality.clone(), file.municipality.clone()).unwrap_or_else(|| DEFAULT_MUNICIPALITY.into());
    let s = pick(common.scenario.clone(), file.scenario.clone()).unwrap_or_else(|| default_scenario.into());
    let muni = municipality(&m)?;
    let sc = scenario(&s)?;
    muni.validate().map_err(|e| RunError::validation(Stage::Load, e.to_string()))?;
    sc.apply(&muni.site, &muni.dle)
        .map_err(|e| RunError::validation(Stage::Scenario, format!("`{}`: {e}", sc.name)))?;
    Ok((muni, sc))
}

fn finish(report: &Report, out: Option<&Path>) -> Result<(), RunError> {
    if let Some(dir) = out {
        for p in write_report(dir, report)? {
            info!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn optimize(a: &OptimizeArgs) -> Result<(), RunError> {
    let file = load_config(&a.common)?;
    let opts = run_options(&flags(&a.run), &file);
    let (muni, sc) = selected(&a.common, &file, "baseline")?;
    let backend = SimplexBackend::default();
    let run = run_scenario(&muni, &sc, &opts, &backend)?;
    print_system(&run.system);
    let mut report = Report::default();
    if pick(a.full_resolution_check.then_some(true), file.full_resolution_check).unwrap_or(false) {
        let r = full_resolution_check(&muni, &sc, &run, &opts, &BendersOptions::default(), &backend)?;
        let diff = (run.system.tac - r.tac) / r.tac.abs() * 100.0;
        println!(
            "full resolution: TAC {:.0} EUR/a (aggregated {diff:+.3} %), gap {:.1e}, {} iterations",
            r.tac,
            r.gap(),
            r.iterations
        );
    }
    if pick(a.compare.then_some(true), file.compare).unwrap_or(false) && opts.dle_enabled {
        let without = run_scenario_on_same(&muni, &sc, &run, &opts, &backend)?;
        let c = compare(&run.system, &without.system)?;
        match c.cost_decrease_pct {
            Some(p) => println!("cost decrease from lithium extraction: {p:.1} %"),
            None => println!("cost decrease from lithium extraction: undefined"),
        }
        report.runs.push(without);
        report.comparisons.push(c);
    }
    report.runs.insert(0, run);
    finish(&report, pick(a.run.out.clone(), file.out.clone()).as_deref())
}

fn run_scenario_on_same(
    muni: &Municipality,
    sc: &Scenario,
    run: &geolith::runner::ScenarioRun,
    opts: &RunOptions,
    backend: &SimplexBackend,
) -> Result<geolith::runner::ScenarioRun, RunError> {
    let o = RunOptions {
        dle_enabled: false,
        ..opts.clone()
    };
    geolith::runner::run_scenario_on(muni, sc, &run.aggregation, &o, backend)
}

fn print_system(s: &geolith::esom::SolvedSystem) {
    println!("{} / {} (lithium extraction {})", s.municipality, s.scenario, if s.dle_enabled { "on" } else { "off" });
    println!("  TAC {:.0} EUR/a", s.tac);
    match &s.geothermal {
        Some(g) => println!(
            "  geothermal: {:.0} m, {:.1} °C, ORC {:.0} kW_el, DHP {:.0} kW_th, {:.0} t Li2CO3/a",
            g.depth, g.wellhead_temperature, g.orc_capacity, g.dhp_capacity, s.lithium.annual_carbonate
        ),
        None => println!("  geothermal: not built"),
    }
}

fn sensitivity(a: &SensitivityArgs) -> Result<(), RunError> {
    let file = load_config(&a.common)?;
    let opts = run_options(&flags(&a.run), &file);
    let parameter = pick(a.param, file.param)
        .ok_or_else(|| RunError::validation(Stage::Sensitivity, "--param is required"))?;
    let values = pick(a.values.clone(), file.values.clone())
        .ok_or_else(|| RunError::validation(Stage::Sensitivity, "--values is required"))?;
    let m = pick(a.common.municipality.clone(), file.municipality.clone()).unwrap_or_else(|| DEFAULT_MUNICIPALITY.into());
    let muni = municipality(&m)?;
    let base = match pick(a.common.scenario.clone(), file.scenario.clone()) {
        Some(s) => scenario(&s)?,
        None => sensitivity_base(),
    };
    let spec = SensitivitySpec {
        parameter,
        values,
        base_scenario: base,
    };
    let rows = run_sensitivity(&muni, &spec, &opts, &SimplexBackend::default())?;
    for r in &rows {
        match (r.tac, &r.error) {
            (Some(t), _) => println!("{parameter} = {}: TAC {t:.0} EUR/a, {:.0} t Li2CO3/a", r.value, r.carbonate_t),
            (None, e) => println!("{parameter} = {}: failed: {}", r.value, e.as_deref().unwrap_or("")),
        }
    }
    let report = Report {
        sensitivity: Some(SensitivityTable { parameter, rows }),
        ..Default::default()
    };
    finish(&report, pick(a.run.out.clone(), file.out.clone()).as_deref())
}

fn fleet_members(dir: &Path) -> Result<Vec<Municipality>, RunError> {
    let read = fs::read_dir(dir).map_err(|e| RunError::validation(Stage::Load, format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| !matches!(p.file_name().and_then(|n| n.to_str()), Some("technologies.json" | "impact_factors.json")))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| load_municipality(p).map_err(|e| RunError::validation(Stage::Load, e.to_string())))
        .collect()
}

fn build_synthetic(n: usize, seed: u64) -> Result<Vec<Municipality>, RunError> {
    let catalog = bundled_catalog().map_err(|e| RunError::validation(Stage::Load, e.to_string()))?;
    synthetic_fleet(n, seed)
        .iter()
        .map(|s| s.build(catalog.clone()).map_err(|e| RunError::validation(Stage::Load, e.to_string())))
        .collect()
}

fn fleet(a: &FleetArgs) -> Result<(), RunError> {
    let file = load_config(&a.common)?;
    let opts = run_options(&flags(&a.run), &file);
    let munis = match (pick(a.dir.clone(), file.dir.clone()), pick(a.synthetic, file.synthetic)) {
        (Some(dir), _) => fleet_members(&dir)?,
        (None, Some(n)) => build_synthetic(n, pick(a.seed, file.seed).unwrap_or(1))?,
        (None, None) => return Err(RunError::validation(Stage::Fleet, "either --dir or --synthetic is required")),
    };
    let sc = scenario(&pick(a.common.scenario.clone(), file.scenario.clone()).unwrap_or_else(|| "mean_urg".into()))?;
    let jobs = pick(a.jobs, file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let ordering = pick(a.ordering, file.ordering).unwrap_or_default();
    let result = run_fleet(&munis, &sc, &opts, &SimplexBackend::default(), jobs, ordering)?;
    for e in result.failures() {
        eprintln!("{}: {}", e.municipality, e.errors.join("; "));
    }
    if let Some(last) = result.curve.last() {
        println!(
            "{} municipalities: ORC {:.1} MW, DHP {:.1} MW, {:.0} t Li2CO3/a",
            result.entries.len(),
            last.orc_mw_cum,
            last.dhp_mw_cum,
            last.li2co3_t_cum
        );
    }
    let report = Report {
        fleet: Some(result),
        ..Default::default()
    };
    finish(&report, pick(a.run.out.clone(), file.out.clone()).as_deref())
}

fn synth(a: &SynthArgs) -> Result<(), RunError> {
    let catalog = bundled_catalog().map_err(|e| RunError::validation(Stage::Load, e.to_string()))?;
    let specs = match a.fleet {
        Some(n) => synthetic_fleet(n, a.seed),
        None => vec![SyntheticMunicipality::bruchsal_like()],
    };
    for s in specs {
        let m = s.build(catalog.clone()).map_err(|e| RunError::validation(Stage::Load, e.to_string()))?;
        let p = save_municipality(&m, &a.out, &s.name).map_err(|e| RunError::validation(Stage::Export, e.to_string()))?;
        println!("{}", p.display());
    }
    Ok(())
}

fn validate(common: &Common) -> Result<(), RunError> {
    let file = load_config(common)?;
    let (muni, sc) = selected(common, &file, "baseline")?;
    println!("{}: ok ({} technologies, scenario {})", muni.name, muni.technologies().len(), sc.name);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOLITH_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(c) => validate(c),
        Command::Optimize(a) => optimize(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Fleet(a) => fleet(a),
        Command::Report(a) => read_report(&a.input).and_then(|r| finish(&r, Some(&a.out))),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
