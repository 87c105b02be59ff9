//! Time steps of a model: aggregated typical periods or raw days.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::domain::{Commodity, Municipality};
use crate::tsagg::{TypicalPeriods, HOURS_PER_DAY};

const DEMAND_PREFIX: &str = "demand:";
const PROFILE_PREFIX: &str = "profile:";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub period: usize,
    pub segment: usize,
    /// Hours of the year this step stands for.
    pub weight: f64,
    /// Hours covered within its period.
    pub duration: f64,
}

/// Steps grouped into periods; storage cycles within each period.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub steps: Vec<Step>,
    pub periods: Vec<Range<usize>>,
    /// kW per step.
    pub demand: BTreeMap<Commodity, Vec<f64>>,
    /// Capacity factor per step.
    pub availability: BTreeMap<String, Vec<f64>>,
}

/// The named series that aggregation must cluster jointly.
pub fn aggregation_attributes(muni: &Municipality) -> BTreeMap<String, Vec<f64>> {
    let mut out = BTreeMap::new();
    for (c, ts) in &muni.demand {
        out.insert(format!("{DEMAND_PREFIX}{c}"), ts.values().to_vec());
    }
    for (n, ts) in &muni.profiles {
        out.insert(format!("{PROFILE_PREFIX}{n}"), ts.values().to_vec());
    }
    out
}

impl TimeGrid {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn from_aggregation(tp: &TypicalPeriods) -> Self {
        let mut steps = Vec::new();
        let mut periods = Vec::new();
        for p in 0..tp.n_periods {
            let start = steps.len();
            for s in 0..tp.segment_durations[p].len() {
                steps.push(Step {
                    period: p,
                    segment: s,
                    weight: tp.weight(p, s),
                    duration: tp.segment_durations[p][s] as f64,
                });
            }
            periods.push(start..steps.len());
        }
        let flat = |v: &Vec<Vec<f64>>| v.iter().flatten().copied().collect::<Vec<f64>>();
        let mut demand = BTreeMap::new();
        let mut availability = BTreeMap::new();
        for (name, v) in &tp.representative_values {
            if let Some(c) = name.strip_prefix(DEMAND_PREFIX).and_then(Commodity::parse) {
                demand.insert(c, flat(v));
            } else if let Some(p) = name.strip_prefix(PROFILE_PREFIX) {
                // rescaling can leave a factor a rounding step above 1
                availability.insert(p.to_string(), flat(v).into_iter().map(|x| x.min(1.0)).collect());
            }
        }
        Self {
            steps,
            periods,
            demand,
            availability,
        }
    }

    /// Raw hourly data of consecutive days, one period per day.
    pub fn hourly(muni: &Municipality, days: Range<usize>) -> Self {
        let hours = days.start * HOURS_PER_DAY..days.end * HOURS_PER_DAY;
        let mut steps = Vec::with_capacity(hours.len());
        let mut periods = Vec::new();
        for (p, _) in days.clone().enumerate() {
            periods.push(p * HOURS_PER_DAY..(p + 1) * HOURS_PER_DAY);
            for s in 0..HOURS_PER_DAY {
                steps.push(Step {
                    period: p,
                    segment: s,
                    weight: 1.0,
                    duration: 1.0,
                });
            }
        }
        let cut = |v: &[f64]| v[hours.clone()].to_vec();
        Self {
            steps,
            periods,
            demand: muni.demand.iter().map(|(c, ts)| (*c, cut(ts.values()))).collect(),
            availability: muni.profiles.iter().map(|(n, ts)| (n.clone(), cut(ts.values()))).collect(),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.steps.iter().map(|s| s.weight).sum()
    }
}
