//! JSON/CSV ingestion and serialization of municipalities and catalogs.
//!
//! A municipality document references its series by relative path; the
//! paths resolve against the document's directory. Bundled datasets are
//! compiled into the binary and resolve against an in-memory table.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    Catalog, Commodity, CoreError, DleParams, GeothermalSiteParams, Municipality, Sector, SeriesUnit, TimeSeries,
    HOURS_PER_YEAR,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MunicipalityDoc {
    schema_version: u32,
    name: String,
    #[serde(default)]
    sectors: Vec<Sector>,
    demand: BTreeMap<Commodity, String>,
    #[serde(default)]
    profiles: BTreeMap<String, String>,
    #[serde(default)]
    potentials: BTreeMap<String, f64>,
    #[serde(default)]
    existing: BTreeMap<String, f64>,
    site: GeothermalSiteParams,
    dle: DleParams,
    /// Catalog path; the bundled catalog when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    catalog: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDoc {
    schema_version: u32,
    #[serde(flatten)]
    catalog: Catalog,
}

/// Where relative references are read from.
trait Source {
    fn read(&self, rel: &str) -> Result<String, CoreError>;
}

struct DirSource(PathBuf);

impl Source for DirSource {
    fn read(&self, rel: &str) -> Result<String, CoreError> {
        let path = self.0.join(rel);
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CoreError::MissingSeries { path },
            _ => CoreError::Io { path, source: e },
        })
    }
}

struct BundledSource;

const BUNDLED: &[(&str, &str)] = &[
    ("bruchsal_like.json", include_str!("../../data/bruchsal_like.json")),
    ("technologies.json", include_str!("../../data/technologies.json")),
    ("series_bruchsal_like/electricity.csv", include_str!("../../data/series_bruchsal_like/electricity.csv")),
    ("series_bruchsal_like/heat_low.csv", include_str!("../../data/series_bruchsal_like/heat_low.csv")),
    ("series_bruchsal_like/process_heat_low.csv", include_str!("../../data/series_bruchsal_like/process_heat_low.csv")),
    ("series_bruchsal_like/process_heat_medium.csv", include_str!("../../data/series_bruchsal_like/process_heat_medium.csv")),
    ("series_bruchsal_like/process_heat_high.csv", include_str!("../../data/series_bruchsal_like/process_heat_high.csv")),
    ("series_bruchsal_like/hydrogen.csv", include_str!("../../data/series_bruchsal_like/hydrogen.csv")),
    ("series_bruchsal_like/pv.csv", include_str!("../../data/series_bruchsal_like/pv.csv")),
    ("series_bruchsal_like/wind.csv", include_str!("../../data/series_bruchsal_like/wind.csv")),
];

impl Source for BundledSource {
    fn read(&self, rel: &str) -> Result<String, CoreError> {
        BUNDLED
            .iter()
            .find(|(n, _)| *n == rel)
            .map(|(_, s)| s.to_string())
            .ok_or_else(|| CoreError::MissingSeries { path: rel.into() })
    }
}

/// Names of the bundled municipality datasets.
pub const BUNDLED_MUNICIPALITIES: [&str; 1] = ["bruchsal_like"];

pub fn load_municipality(path: &Path) -> Result<Municipality, CoreError> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    parse_municipality(&text, &path.display().to_string(), &DirSource(dir))
}

pub fn bundled_municipality(name: &str) -> Result<Municipality, CoreError> {
    if !BUNDLED_MUNICIPALITIES.contains(&name) {
        return Err(CoreError::UnknownName {
            kind: "bundled municipality",
            name: name.to_string(),
        });
    }
    let file = format!("{name}.json");
    parse_municipality(&BundledSource.read(&file)?, &file, &BundledSource)
}

pub fn bundled_catalog() -> Result<Catalog, CoreError> {
    parse_catalog(&BundledSource.read("technologies.json")?, "technologies.json")
}

pub fn load_catalog(path: &Path) -> Result<Catalog, CoreError> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_catalog(&text, &path.display().to_string())
}

fn schema_error(location: &str, e: serde_json::Error) -> CoreError {
    CoreError::schema(format!("{location}:{}:{}", e.line(), e.column()), e.to_string())
}

fn check_version(v: u32, location: &str) -> Result<(), CoreError> {
    if v != SCHEMA_VERSION {
        return Err(CoreError::schema(
            format!("{location}: schema_version"),
            format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
        ));
    }
    Ok(())
}

fn parse_catalog(text: &str, location: &str) -> Result<Catalog, CoreError> {
    let doc: CatalogDoc = serde_json::from_str(text).map_err(|e| schema_error(location, e))?;
    check_version(doc.schema_version, location)?;
    doc.catalog.validate()?;
    Ok(doc.catalog)
}

fn parse_municipality(text: &str, location: &str, src: &dyn Source) -> Result<Municipality, CoreError> {
    let doc: MunicipalityDoc = serde_json::from_str(text).map_err(|e| schema_error(location, e))?;
    check_version(doc.schema_version, location)?;
    let catalog = match &doc.catalog {
        Some(rel) => parse_catalog(&src.read(rel)?, rel)?,
        None => bundled_catalog()?,
    };
    let mut demand = BTreeMap::new();
    for (c, rel) in &doc.demand {
        demand.insert(*c, parse_series(&src.read(rel)?, SeriesUnit::Kw, rel)?);
    }
    let mut profiles = BTreeMap::new();
    for (n, rel) in &doc.profiles {
        profiles.insert(n.clone(), parse_series(&src.read(rel)?, SeriesUnit::CapacityFactor, rel)?);
    }
    let muni = Municipality {
        name: doc.name,
        sectors: doc.sectors,
        demand,
        profiles,
        potentials: doc.potentials,
        existing: doc.existing,
        site: doc.site,
        dle: doc.dle,
        catalog,
    };
    muni.validate()?;
    Ok(muni)
}

/// Parses an `hour,value` CSV with exactly one row per hour of the year.
pub fn parse_series(text: &str, unit: SeriesUnit, label: &str) -> Result<TimeSeries, CoreError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CoreError::schema(label, e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "hour" || &headers[1] != "value" {
        return Err(CoreError::schema(format!("{label}:1"), "header must be `hour,value`"));
    }
    let mut values = Vec::with_capacity(HOURS_PER_YEAR);
    let mut first_hour = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CoreError::schema(format!("{label}:{line}"), e.to_string()))?;
        let hour: usize = rec[0]
            .parse()
            .map_err(|_| CoreError::schema(format!("{label}:{line}"), format!("bad hour `{}`", &rec[0])))?;
        let start = *first_hour.get_or_insert(hour);
        if start > 1 || hour != start + i {
            return Err(CoreError::schema(
                format!("{label}:{line}"),
                "hours must be consecutive from 0 or 1",
            ));
        }
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| CoreError::schema(format!("{label}:{line}"), format!("bad value `{}`", &rec[1])))?;
        values.push(v);
    }
    if values.len() != HOURS_PER_YEAR {
        return Err(CoreError::LengthMismatch {
            series: label.to_string(),
            expected: HOURS_PER_YEAR,
            got: values.len(),
        });
    }
    TimeSeries::new(unit, values)
}

/// Formats a series as `hour,value` CSV. `{}` prints the shortest string
/// that parses back to the same f64.
pub fn format_series(ts: &TimeSeries) -> String {
    let mut s = String::with_capacity(ts.len() * 16);
    s.push_str("hour,value\n");
    for (h, v) in ts.values().iter().enumerate() {
        s.push_str(&format!("{h},{v}\n"));
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CoreError::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| CoreError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn catalog_to_json(catalog: &Catalog) -> String {
    let doc = CatalogDoc {
        schema_version: SCHEMA_VERSION,
        catalog: catalog.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("catalog serializes") + "\n"
}

/// Writes `<dir>/<file_stem>.json`, its catalog and its series. Returns the
/// path of the municipality document.
pub fn save_municipality(muni: &Municipality, dir: &Path, file_stem: &str) -> Result<PathBuf, CoreError> {
    let series_dir = format!("series_{file_stem}");
    let mut demand = BTreeMap::new();
    for (c, ts) in &muni.demand {
        let rel = format!("{series_dir}/{c}.csv");
        write_file(&dir.join(&rel), &format_series(ts))?;
        demand.insert(*c, rel);
    }
    let mut profiles = BTreeMap::new();
    for (n, ts) in &muni.profiles {
        let rel = format!("{series_dir}/{n}.csv");
        write_file(&dir.join(&rel), &format_series(ts))?;
        profiles.insert(n.clone(), rel);
    }
    let catalog_rel = "technologies.json".to_string();
    write_file(&dir.join(&catalog_rel), &catalog_to_json(&muni.catalog))?;
    let doc = MunicipalityDoc {
        schema_version: SCHEMA_VERSION,
        name: muni.name.clone(),
        sectors: muni.sectors.clone(),
        demand,
        profiles,
        potentials: muni.potentials.clone(),
        existing: muni.existing.clone(),
        site: muni.site.clone(),
        dle: muni.dle.clone(),
        catalog: Some(catalog_rel),
    };
    let path = dir.join(format!("{file_stem}.json"));
    write_file(&path, &(serde_json::to_string_pretty(&doc).expect("municipality serializes") + "\n"))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_rows(n: usize) -> String {
        let mut s = "hour,value\n".to_string();
        for h in 0..n {
            s.push_str(&format!("{h},1.5\n"));
        }
        s
    }

    #[test]
    fn short_series_is_a_length_mismatch() {
        let e = parse_series(&csv_rows(8759), SeriesUnit::Kw, "x.csv").unwrap_err();
        assert!(matches!(e, CoreError::LengthMismatch { got: 8759, .. }));
    }

    #[test]
    fn wrong_header_is_a_schema_error() {
        let text = csv_rows(8760).replacen("hour,value", "h,v", 1);
        assert!(matches!(parse_series(&text, SeriesUnit::Kw, "x.csv"), Err(CoreError::Schema { .. })));
    }

    #[test]
    fn capacity_factor_above_one_is_rejected() {
        let text = csv_rows(8760);
        assert!(matches!(
            parse_series(&text, SeriesUnit::CapacityFactor, "x.csv"),
            Err(CoreError::Invariant { .. })
        ));
    }

    #[test]
    fn series_format_round_trips() {
        let ts = TimeSeries::kw((0..8760).map(|h| (h as f64).sqrt() / 3.0).collect()).unwrap();
        let back = parse_series(&format_series(&ts), SeriesUnit::Kw, "x").unwrap();
        assert_eq!(ts, back);
    }
}
