//! Settings file for the command line tool. Every field is optional; a
//! value given on the command line beats the file, which beats the
//! built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{FleetOrdering, RunError, RunOptions, SensitivityParameter, Stage};
use crate::esom::SweepMode;
use crate::tsagg::Representation;

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Path, or `bundled:<name>`.
    pub municipality: Option<String>,
    pub scenario: Option<String>,
    pub dle: Option<bool>,
    pub periods: Option<usize>,
    pub segments: Option<usize>,
    pub representation: Option<Representation>,
    pub pin_peak_of: Option<String>,
    pub interest_rate: Option<f64>,
    pub sweep_mode: Option<SweepMode>,
    pub out: Option<PathBuf>,
    pub compare: Option<bool>,
    pub full_resolution_check: Option<bool>,
    pub param: Option<SensitivityParameter>,
    pub values: Option<Vec<f64>>,
    pub dir: Option<PathBuf>,
    pub synthetic: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub ordering: Option<FleetOrdering>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::validation(Stage::Load, format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| RunError::validation(Stage::Load, format!("{}: {e}", path.display())))
    }
}

/// The first of command line and file value that is set.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Command line values for the shared run settings.
#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    pub no_dle: bool,
    pub periods: Option<usize>,
    pub segments: Option<usize>,
    pub representation: Option<Representation>,
    pub pin_peak_of: Option<String>,
    pub interest_rate: Option<f64>,
    pub sweep_mode: Option<SweepMode>,
}

pub fn run_options(flags: &RunFlags, file: &FileConfig) -> RunOptions {
    let d = RunOptions::default();
    let mut econ = d.econ.clone();
    if let Some(r) = pick(flags.interest_rate, file.interest_rate) {
        econ.interest_rate = r;
    }
    // `--no-dle` can only switch lithium extraction off.
    let dle_enabled = if flags.no_dle { false } else { file.dle.unwrap_or(d.dle_enabled) };
    RunOptions {
        n_periods: pick(flags.periods, file.periods).unwrap_or(d.n_periods),
        n_segments: pick(flags.segments, file.segments).unwrap_or(d.n_segments),
        dle_enabled,
        representation: pick(flags.representation, file.representation).unwrap_or(d.representation),
        pin_peak_of: pick(flags.pin_peak_of.clone(), file.pin_peak_of.clone()).or(d.pin_peak_of),
        econ,
        sweep_mode: pick(flags.sweep_mode, file.sweep_mode).unwrap_or(d.sweep_mode),
    }
}
