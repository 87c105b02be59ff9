use serde::{Deserialize, Serialize};

use super::{RunError, Stage};
use crate::esom::SolvedSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityDelta {
    pub component: String,
    pub without: f64,
    pub with: f64,
    /// `with - without`
    pub delta: f64,
    /// Relative change in percent; `None` when a capacity appears from
    /// nothing.
    pub delta_pct: Option<f64>,
}

/// What adding an option changed in a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub municipality: String,
    pub capacities: Vec<CapacityDelta>,
    pub tac_without: f64,
    pub tac_with: f64,
    pub tac_delta: f64,
    /// `(TAC_without - TAC_with) / |TAC_without|` in percent. Above 100 %
    /// the municipality makes a profit. `None` when `TAC_without` is zero.
    pub cost_decrease_pct: Option<f64>,
    pub carbonate_t_with: f64,
}

impl Comparison {
    pub fn delta(&self, component: &str) -> Option<&CapacityDelta> {
        self.capacities.iter().find(|d| d.component == component)
    }
}

fn shape(s: &SolvedSystem) -> Vec<usize> {
    s.dispatch.values().next().map(|p| p.iter().map(Vec::len).collect()).unwrap_or_default()
}

pub fn percent_change(without: f64, with: f64) -> Option<f64> {
    if without != 0.0 {
        Some((with - without) / without.abs() * 100.0)
    } else if with == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Compares two runs of the same municipality on the same aggregation.
pub fn compare(with: &SolvedSystem, without: &SolvedSystem) -> Result<Comparison, RunError> {
    if with.municipality != without.municipality {
        return Err(RunError::validation(
            Stage::Comparison,
            format!("municipalities differ: `{}` vs `{}`", with.municipality, without.municipality),
        ));
    }
    if shape(with) != shape(without) {
        return Err(RunError::validation(Stage::Comparison, "the runs use different time aggregations"));
    }
    let mut names: Vec<&String> = with.capacities.keys().chain(without.capacities.keys()).collect();
    names.sort();
    names.dedup();
    let capacities = names
        .into_iter()
        .map(|n| {
            let a = without.capacity(n);
            let b = with.capacity(n);
            CapacityDelta {
                component: n.clone(),
                without: a,
                with: b,
                delta: b - a,
                delta_pct: percent_change(a, b),
            }
        })
        .collect();
    let cost_decrease_pct = (without.tac != 0.0).then(|| (without.tac - with.tac) / without.tac.abs() * 100.0);
    Ok(Comparison {
        municipality: with.municipality.clone(),
        capacities,
        tac_without: without.tac,
        tac_with: with.tac,
        tac_delta: with.tac - without.tac,
        cost_decrease_pct,
        carbonate_t_with: with.lithium.annual_carbonate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_arithmetic() {
        assert!((percent_change(10.0, 7.6).unwrap() + 24.0).abs() < 1e-12);
        assert_eq!(percent_change(0.0, 0.0), Some(0.0));
        assert_eq!(percent_change(0.0, 3.0), None);
    }
}
