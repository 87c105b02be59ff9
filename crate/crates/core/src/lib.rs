//! Optimization of greenhouse-gas-neutral municipal energy systems with
//! deep geothermal plants and direct lithium extraction.

pub mod dle;
pub mod domain;
pub mod esom;
pub mod geothermal;
pub mod runner;
pub mod tsagg;
