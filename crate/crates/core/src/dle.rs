//! Direct lithium extraction: brine mass balance, carbonate conversion,
//! economics and downstream impact metrics.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::LI_TO_CARBONATE;

/// Upper bound on operating hours in a year (365.25 days).
pub const MAX_OPERATING_HOURS: f64 = 8766.0;

#[derive(Debug, Error, PartialEq)]
pub enum DleError {
    #[error("{0} must be finite and >= 0")]
    Negative(&'static str),
    #[error("extraction efficiency {0} outside [0, 1]")]
    Efficiency(f64),
    #[error("operating hours {0} outside [0, 8766]")]
    Hours(f64),
    #[error("impact factor `{0}` must be > 0")]
    Factor(String),
    #[error("impact factor file: {0}")]
    Parse(String),
}

fn nonneg(v: f64, what: &'static str) -> Result<(), DleError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(DleError::Negative(what))
    }
}

/// Annual lithium figures of one plant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LithiumOutput {
    /// mg/s at full brine flow.
    pub li_mass_rate: f64,
    /// t Li per year.
    pub annual_li: f64,
    /// t Li₂CO₃ per year.
    pub annual_carbonate: f64,
    /// €/a
    pub revenue: f64,
    /// €/a
    pub dle_opex: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactFactors {
    pub kg_li_per_pack: f64,
    pub reference_ev_registrations: f64,
    /// kg CO₂eq avoided per kg Li₂CO₃.
    pub abatement_factor: f64,
    /// kg CO₂eq per kg LCE of alternative supply routes.
    pub comparison_footprints: BTreeMap<String, f64>,
}

impl Default for ImpactFactors {
    fn default() -> Self {
        Self::from_json(include_str!("../data/impact_factors.json")).expect("bundled impact factors are valid")
    }
}

impl ImpactFactors {
    pub fn from_json(text: &str) -> Result<Self, DleError> {
        let f: Self = serde_json::from_str(text).map_err(|e| DleError::Parse(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self, DleError> {
        let text = std::fs::read_to_string(path).map_err(|e| DleError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), DleError> {
        let named = [
            ("kg_li_per_pack", self.kg_li_per_pack),
            ("reference_ev_registrations", self.reference_ev_registrations),
            ("abatement_factor", self.abatement_factor),
        ];
        for (n, v) in named.into_iter().chain(self.comparison_footprints.iter().map(|(k, v)| (k.as_str(), *v))) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DleError::Factor(n.to_string()));
            }
        }
        Ok(())
    }
}

/// Lithium extracted per second (mg/s) from `flow` l/s at `c_li` mg/l.
pub fn lithium_rate(flow: f64, c_li: f64, eta: f64) -> Result<f64, DleError> {
    nonneg(flow, "flow")?;
    nonneg(c_li, "lithium concentration")?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(DleError::Efficiency(eta));
    }
    Ok(flow * c_li * eta)
}

/// Tonnes of lithium and of lithium carbonate per year.
pub fn annualize(rate_mg_s: f64, operating_hours: f64) -> Result<(f64, f64), DleError> {
    nonneg(rate_mg_s, "lithium rate")?;
    if !(0.0..=MAX_OPERATING_HOURS).contains(&operating_hours) {
        return Err(DleError::Hours(operating_hours));
    }
    let li_t = rate_mg_s * 3600.0 * operating_hours * 1e-9;
    Ok((li_t, li_t * LI_TO_CARBONATE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarbonateEconomics {
    pub revenue: f64,
    pub opex: f64,
    pub annualized_capex: f64,
    /// Revenue minus costs; negative when the plant loses money.
    pub net: f64,
}

pub fn carbonate_economics(
    carbonate_t: f64,
    price: f64,
    opex_per_t: f64,
    capex: f64,
    annuity: f64,
) -> Result<CarbonateEconomics, DleError> {
    nonneg(carbonate_t, "carbonate mass")?;
    nonneg(price, "price")?;
    nonneg(opex_per_t, "opex per tonne")?;
    nonneg(capex, "capex")?;
    nonneg(annuity, "annuity")?;
    let revenue = carbonate_t * price;
    let opex = carbonate_t * opex_per_t;
    let annualized_capex = capex * annuity;
    Ok(CarbonateEconomics {
        revenue,
        opex,
        annualized_capex,
        net: revenue - opex - annualized_capex,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackEstimate {
    pub packs: f64,
    /// Packs over reference EV registrations.
    pub registration_share: f64,
}

pub fn battery_packs(carbonate_t: f64, factors: &ImpactFactors) -> Result<PackEstimate, DleError> {
    nonneg(carbonate_t, "carbonate mass")?;
    let li_t = carbonate_t / LI_TO_CARBONATE;
    let packs = li_t / (factors.kg_li_per_pack / 1000.0);
    Ok(PackEstimate {
        packs,
        registration_share: packs / factors.reference_ev_registrations,
    })
}

/// Avoided emissions in t CO₂eq per year.
pub fn co2_abatement(carbonate_t: f64, factors: &ImpactFactors) -> Result<f64, DleError> {
    nonneg(carbonate_t, "carbonate mass")?;
    Ok(carbonate_t * factors.abatement_factor)
}
