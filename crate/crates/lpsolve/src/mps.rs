//! MPS import and export.
//!
//! The writer emits fixed-column MPS; the reader accepts any
//! whitespace-separated layout, so names must not contain blanks. Supported
//! sections are `ROWS`, `COLUMNS`, `RHS` and `BOUNDS` (`LO UP FX FR MI PL`).
//! A right-hand side on the objective row is the negated objective offset.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::MpsError;
use crate::model::{LpModel, RowId, Sense, VarId};

const OBJ: &str = "COST";

fn clean(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
    if s.is_empty() { "_".into() } else { s }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Writes `model` to `out`. Row and variable names are made blank-free;
/// duplicate names are disambiguated by their index.
pub fn write<W: Write>(model: &LpModel, mut out: W) -> Result<(), MpsError> {
    let var_names = unique(model.vars().iter().map(|v| clean(&v.name)), "C");
    let row_names = unique(model.rows().iter().map(|r| clean(&r.name)), "R");
    let a = model.to_csc();
    let mut s = String::new();
    writeln!(s, "NAME          {}", clean(&model.name)).ok();
    writeln!(s, "ROWS").ok();
    writeln!(s, " N  {OBJ}").ok();
    for (r, name) in model.rows().iter().zip(&row_names) {
        let t = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        writeln!(s, " {t}  {name}").ok();
    }
    writeln!(s, "COLUMNS").ok();
    for (j, (v, name)) in model.vars().iter().zip(&var_names).enumerate() {
        if v.cost != 0.0 {
            writeln!(s, "    {name:<8}  {OBJ:<8}  {}", num(v.cost)).ok();
        }
        let (rows, vals) = a.col(j);
        for (&i, &val) in rows.iter().zip(vals) {
            writeln!(s, "    {name:<8}  {:<8}  {}", row_names[i], num(val)).ok();
        }
        if v.cost == 0.0 && rows.is_empty() {
            writeln!(s, "    {name:<8}  {OBJ:<8}  0").ok();
        }
    }
    writeln!(s, "RHS").ok();
    if model.objective_offset != 0.0 {
        writeln!(s, "    RHS       {OBJ:<8}  {}", num(-model.objective_offset)).ok();
    }
    for (r, name) in model.rows().iter().zip(&row_names) {
        if r.rhs != 0.0 {
            writeln!(s, "    RHS       {name:<8}  {}", num(r.rhs)).ok();
        }
    }
    writeln!(s, "BOUNDS").ok();
    for (v, name) in model.vars().iter().zip(&var_names) {
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            writeln!(s, " FX BND       {name:<8}  {}", num(lo)).ok();
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            writeln!(s, " FR BND       {name}").ok();
            continue;
        }
        if lo == f64::NEG_INFINITY {
            writeln!(s, " MI BND       {name}").ok();
        } else if lo != 0.0 {
            writeln!(s, " LO BND       {name:<8}  {}", num(lo)).ok();
        }
        if hi != f64::INFINITY {
            writeln!(s, " UP BND       {name:<8}  {}", num(hi)).ok();
        }
    }
    writeln!(s, "ENDATA").ok();
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn unique(names: impl Iterator<Item = String>, prefix: &str) -> Vec<String> {
    let mut seen = HashMap::new();
    names
        .enumerate()
        .map(|(i, n)| {
            if n == OBJ || seen.contains_key(&n) {
                format!("{prefix}{i}_{n}")
            } else {
                seen.insert(n.clone(), ());
                n
            }
        })
        .collect()
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

/// Reads a model written by [`write`] or any free-format MPS restricted to
/// the supported sections.
pub fn read<R: BufRead>(input: R) -> Result<LpModel, MpsError> {
    let mut model = LpModel::new("");
    let mut section = Section::None;
    let mut rows: HashMap<String, Option<RowId>> = HashMap::new();
    let mut vars: HashMap<String, VarId> = HashMap::new();
    let mut bounded_upper: Vec<bool> = Vec::new();
    let err = |line: usize, msg: String| MpsError::Parse { line, msg };

    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(err(lineno, format!("unsupported section `{other}`"))),
            };
            continue;
        }
        let value = |k: usize| -> Result<f64, MpsError> {
            fields
                .get(k)
                .ok_or_else(|| err(lineno, "missing value".into()))?
                .parse::<f64>()
                .map_err(|e| err(lineno, e.to_string()))
        };
        match section {
            Section::Rows => {
                if fields.len() < 2 {
                    return Err(err(lineno, "row needs a type and a name".into()));
                }
                let id = match fields[0] {
                    "N" => None,
                    "L" => Some(model.add_row(fields[1], Sense::Le, 0.0)),
                    "G" => Some(model.add_row(fields[1], Sense::Ge, 0.0)),
                    "E" => Some(model.add_row(fields[1], Sense::Eq, 0.0)),
                    t => return Err(err(lineno, format!("unknown row type `{t}`"))),
                };
                rows.insert(fields[1].to_string(), id);
            }
            Section::Columns => {
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(err(lineno, "expected `column row value [row value]`".into()));
                }
                let var = *vars.entry(fields[0].to_string()).or_insert_with(|| {
                    bounded_upper.push(false);
                    model.add_var(fields[0], 0.0, f64::INFINITY, 0.0)
                });
                for k in (1..fields.len()).step_by(2) {
                    let v = value(k + 1)?;
                    match rows.get(fields[k]) {
                        Some(Some(r)) => model.set_coeff(*r, var, v),
                        Some(None) => model.set_cost(var, model.var(var).cost + v),
                        None => return Err(err(lineno, format!("unknown row `{}`", fields[k]))),
                    }
                }
            }
            Section::Rhs => {
                let start = if fields.len() % 2 == 1 { 1 } else { 0 };
                for k in (start..fields.len()).step_by(2) {
                    let v = value(k + 1)?;
                    match rows.get(fields[k]) {
                        Some(Some(r)) => model.set_rhs(*r, v),
                        Some(None) => model.objective_offset = -v,
                        None => return Err(err(lineno, format!("unknown row `{}`", fields[k]))),
                    }
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(lineno, "bound needs a type, set and column".into()));
                }
                let var = *vars
                    .get(fields[2])
                    .ok_or_else(|| err(lineno, format!("unknown column `{}`", fields[2])))?;
                let (lo, hi) = (model.var(var).lower, model.var(var).upper);
                match fields[0] {
                    "LO" => model.set_bounds(var, value(3)?, hi),
                    "UP" => {
                        let v = value(3)?;
                        // an upper bound below zero on a default lower bound makes it free below
                        let lo = if v < 0.0 && lo == 0.0 { f64::NEG_INFINITY } else { lo };
                        model.set_bounds(var, lo, v);
                        bounded_upper[var.0] = true;
                    }
                    "FX" => {
                        let v = value(3)?;
                        model.set_bounds(var, v, v);
                    }
                    "FR" => model.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => model.set_bounds(var, f64::NEG_INFINITY, hi),
                    "PL" => model.set_bounds(var, lo, f64::INFINITY),
                    t => return Err(err(lineno, format!("unsupported bound type `{t}`"))),
                }
            }
            Section::None => return Err(err(lineno, "data outside a section".into())),
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_model() {
        let mut m = LpModel::new("rt");
        let x = m.add_var("x", -1.5, 4.0, 2.0);
        let y = m.add_var("y", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        let z = m.add_var("z", 3.0, 3.0, 0.0);
        let w = m.add_var("w", f64::NEG_INFINITY, 7.0, 0.25);
        m.add_constraint("a", [(x, 1.0), (y, 2.0)], Sense::Le, 5.0);
        m.add_constraint("b", [(y, -1.0), (z, 0.1)], Sense::Ge, -2.0);
        m.add_constraint("c", [(x, 1.0), (w, 1.0)], Sense::Eq, 1.0);
        m.objective_offset = 12.5;
        let mut buf = Vec::new();
        write(&m, &mut buf).unwrap();
        let back = read(buf.as_slice()).unwrap();
        assert_eq!(back.vars(), m.vars());
        assert_eq!(back.rows(), m.rows());
        assert_eq!(back.to_csc(), m.to_csc());
        assert_eq!(back.objective_offset, 12.5);
    }

    #[test]
    fn unknown_row_is_an_error() {
        let text = "NAME t\nROWS\n N COST\nCOLUMNS\n    x  nope  1\nENDATA\n";
        assert!(matches!(read(text.as_bytes()), Err(MpsError::Parse { line: 5, .. })));
    }
}
