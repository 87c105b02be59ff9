//! Municipality files written and read back, and the ways they can be
//! wrong.

mod common;

use std::fs;

use common::bruchsal;
use geolith::domain::loader::{load_municipality, save_municipality};
use geolith::domain::CoreError;

#[test]
fn bundled_dataset_has_the_stated_potentials() {
    let m = bruchsal();
    assert_eq!(m.potentials["wind_onshore"], 75_000.0);
    assert_eq!(m.potentials["pv_rooftop"], 290_000.0);
    assert_eq!(m.potentials["pv_open_field"], 31_000.0);
    assert_eq!(m.existing["pv_rooftop"], 24_000.0);
    assert_eq!(m.hours(), 8760);
}

#[test]
fn saved_municipality_loads_back_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let path = save_municipality(bruchsal(), dir.path(), "copy").unwrap();
    let back = load_municipality(&path).unwrap();
    assert_eq!(&back, bruchsal());
}

fn edit(path: &std::path::Path, f: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn broken_files_are_rejected_with_the_reason() {
    let dir = tempfile::tempdir().unwrap();
    let path = save_municipality(bruchsal(), dir.path(), "m").unwrap();

    let missing = dir.path().join("nope.json");
    assert!(matches!(load_municipality(&missing), Err(CoreError::Io { .. })));

    edit(&path, |v| v["unexpected"] = 1.into());
    assert!(matches!(load_municipality(&path), Err(CoreError::Schema { .. })));

    let path = save_municipality(bruchsal(), dir.path(), "m").unwrap();
    edit(&path, |v| v["schema_version"] = 99.into());
    assert!(load_municipality(&path).is_err());

    let path = save_municipality(bruchsal(), dir.path(), "m").unwrap();
    fs::remove_file(dir.path().join("series_m/wind.csv")).unwrap();
    assert!(matches!(load_municipality(&path), Err(CoreError::MissingSeries { .. })));

    let path = save_municipality(bruchsal(), dir.path(), "m").unwrap();
    let pv = dir.path().join("series_m/pv.csv");
    let text = fs::read_to_string(&pv).unwrap();
    fs::write(&pv, text.lines().take(100).collect::<Vec<_>>().join("\n")).unwrap();
    assert!(matches!(load_municipality(&path), Err(CoreError::LengthMismatch { .. })));

    let path = save_municipality(bruchsal(), dir.path(), "m").unwrap();
    edit(&path, |v| v["site"]["flow_rate"] = (-3.0).into());
    assert!(matches!(load_municipality(&path), Err(CoreError::Invariant { .. })));
}
