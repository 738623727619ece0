//! MPS export of [`MilpModel`] values, plus a reader for round-trip checks
//! and validation of externally produced files.
//!
//! The writer emits the classic section layout (NAME, ROWS, COLUMNS with
//! INTORG/INTEND markers, RHS, BOUNDS, ENDATA) with column-aligned fields.
//! Identifiers longer than the historical 8-character fields are used as-is;
//! every current solver reads them. Numbers are printed with Rust's shortest
//! round-trip float formatting so re-parsing reproduces coefficients
//! bit-exactly.

use crate::error::{Error, Result};
use crate::model::{Constraint, MilpModel, Sense, VarKind, Variable};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const OBJ_ROW: &str = "COST";

pub fn write_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name);
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in &model.constraints {
        let tag = match c.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        let _ = writeln!(out, " {tag}  {}", c.name);
    }
    // column-major entries: objective first, then constraint coefficients in
    // row order
    let mut entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.vars.len()];
    for (vi, v) in model.vars.iter().enumerate() {
        if v.obj != 0.0 {
            entries[vi].push((OBJ_ROW.to_string(), v.obj));
        }
    }
    for c in &model.constraints {
        for &(vi, coef) in &c.terms {
            entries[vi].push((c.name.clone(), coef));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0usize;
    for (vi, v) in model.vars.iter().enumerate() {
        let want_int = v.kind == VarKind::Binary;
        if want_int != in_int {
            let kind = if want_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(
                out,
                "    MARKER{marker:<24}{:<26}{kind}",
                "'MARKER'"
            );
            marker += 1;
            in_int = want_int;
        }
        // at most two (row, value) pairs per line
        for pair in entries[vi].chunks(2) {
            let mut line = format!("    {:<10}", v.name);
            for (row, val) in pair {
                let _ = write!(line, "  {:<10}  {:<14}", row, format_value(*val));
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        if entries[vi].is_empty() {
            // keep the variable declared even without coefficients
            let _ = writeln!(out, "    {:<10}  {OBJ_ROW:<10}  0", v.name);
        }
    }
    if in_int {
        let _ = writeln!(
            out,
            "    MARKER{marker:<24}{:<26}'INTEND'",
            "'MARKER'"
        );
    }
    let _ = writeln!(out, "RHS");
    for c in &model.constraints {
        if c.rhs != 0.0 {
            let _ = writeln!(
                out,
                "    RHS         {:<10}  {}",
                c.name,
                format_value(c.rhs)
            );
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for v in &model.vars {
        match v.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV BND         {}", v.name);
            }
            VarKind::Continuous => {
                // default continuous bounds are [0, +inf); only deviations
                // need BOUNDS entries
                if v.lb != 0.0 {
                    let _ = writeln!(
                        out,
                        " LO BND         {:<10}  {}",
                        v.name,
                        format_value(v.lb)
                    );
                }
                if v.ub.is_finite() {
                    let _ = writeln!(
                        out,
                        " UP BND         {:<10}  {}",
                        v.name,
                        format_value(v.ub)
                    );
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

fn format_value(v: f64) -> String {
    // shortest representation that parses back to the same f64
    format!("{v}")
}

pub fn export_mps(model: &MilpModel, path: &Path) -> Result<()> {
    std::fs::write(path, write_mps(model))?;
    Ok(())
}

/// Reads an MPS file produced by [`write_mps`] (and common solver output)
/// back into a [`MilpModel`]. Sections may appear once, in the usual order.
pub fn parse_mps(text: &str) -> Result<MilpModel> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    let mut name = String::new();
    let mut section = Section::None;
    let mut rows: Vec<(char, String)> = Vec::new();
    let mut row_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut vars: Vec<Variable> = Vec::new();
    let mut var_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut terms: Vec<Vec<(usize, f64)>> = Vec::new(); // per row
    let mut rhs: Vec<f64> = Vec::new();
    let mut in_int = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let err = |msg: &str| Error::Parse(format!("MPS line {}: {msg}", lineno + 1));
        if !raw.starts_with(' ') {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("NAME") => name = it.next().unwrap_or("").to_string(),
                Some("ROWS") => section = Section::Rows,
                Some("COLUMNS") => section = Section::Columns,
                Some("RHS") => section = Section::Rhs,
                Some("RANGES") => return Err(err("RANGES not supported")),
                Some("BOUNDS") => section = Section::Bounds,
                Some("ENDATA") => section = Section::Done,
                Some(other) => return Err(err(&format!("unknown section {other}"))),
                None => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(err("expected sense and row name"));
                }
                let sense = fields[0].chars().next().unwrap();
                if sense == 'N' {
                    continue; // objective row
                }
                row_index.insert(fields[1].to_string(), rows.len());
                rows.push((sense, fields[1].to_string()));
                terms.push(Vec::new());
                rhs.push(0.0);
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    match *fields.last().unwrap() {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        _ => return Err(err("unknown marker")),
                    }
                    continue;
                }
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(err("expected column, then (row, value) pairs"));
                }
                let vname = fields[0];
                let vi = *var_index.entry(vname.to_string()).or_insert_with(|| {
                    vars.push(Variable {
                        name: vname.to_string(),
                        kind: if in_int {
                            VarKind::Binary
                        } else {
                            VarKind::Continuous
                        },
                        lb: 0.0,
                        ub: f64::INFINITY,
                        obj: 0.0,
                    });
                    vars.len() - 1
                });
                for pair in fields[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(&format!("bad number {}", pair[1])))?;
                    if pair[0] == OBJ_ROW {
                        vars[vi].obj = value;
                    } else {
                        let ri = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(&format!("unknown row {}", pair[0])))?;
                        terms[ri].push((vi, value));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(err("expected rhs label then (row, value) pairs"));
                }
                for pair in fields[1..].chunks(2) {
                    let ri = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(&format!("unknown row {}", pair[0])))?;
                    rhs[ri] = pair[1]
                        .parse()
                        .map_err(|_| err(&format!("bad number {}", pair[1])))?;
                }
            }
            Section::Bounds => {
                let kind = fields[0];
                match kind {
                    "BV" => {
                        let vi = *var_index
                            .get(fields[2])
                            .ok_or_else(|| err("bound for unknown variable"))?;
                        vars[vi].kind = VarKind::Binary;
                        vars[vi].lb = 0.0;
                        vars[vi].ub = 1.0;
                    }
                    "LO" | "UP" | "FX" => {
                        if fields.len() != 4 {
                            return Err(err("expected kind, label, variable, value"));
                        }
                        let vi = *var_index
                            .get(fields[2])
                            .ok_or_else(|| err("bound for unknown variable"))?;
                        let value: f64 = fields[3]
                            .parse()
                            .map_err(|_| err(&format!("bad number {}", fields[3])))?;
                        match kind {
                            "LO" => vars[vi].lb = value,
                            "UP" => vars[vi].ub = value,
                            _ => {
                                vars[vi].lb = value;
                                vars[vi].ub = value;
                            }
                        }
                    }
                    other => return Err(err(&format!("bound kind {other} not supported"))),
                }
            }
            Section::None | Section::Done => return Err(err("data outside any section")),
        }
    }
    let constraints: Vec<Constraint> = rows
        .into_iter()
        .zip(terms)
        .zip(rhs)
        .map(|(((sense, name), terms), rhs)| Constraint {
            name,
            terms,
            sense: match sense {
                'L' => Sense::Le,
                'G' => Sense::Ge,
                _ => Sense::Eq,
            },
            rhs,
        })
        .collect();
    // binaries declared via markers keep [0, 1] bounds
    let mut model = MilpModel {
        name,
        vars,
        constraints,
    };
    for v in &mut model.vars {
        if v.kind == VarKind::Binary && !v.ub.is_finite() {
            v.ub = 1.0;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_full_model;

    #[test]
    fn empty_constraint_model_has_header_and_bounds() {
        let model = MilpModel {
            name: "empty".into(),
            vars: vec![Variable {
                name: "z".into(),
                kind: VarKind::Continuous,
                lb: 0.0,
                ub: 5.0,
                obj: 1.0,
            }],
            constraints: vec![],
        };
        let text = write_mps(&model);
        assert!(text.starts_with("NAME"));
        assert!(text.contains("ROWS"));
        assert!(text.contains("BOUNDS"));
        assert!(text.contains(" UP BND"));
        assert!(text.trim_end().ends_with("ENDATA"));
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.vars[0].ub, 5.0);
    }

    #[test]
    fn binary_appears_inside_integer_markers() {
        let inst = crate::instances::toy_instance();
        let m = build_full_model(&inst, Some(1)).unwrap();
        let text = write_mps(&m);
        let org = text.find("'INTORG'").expect("has INTORG");
        let end = text.rfind("'INTEND'").expect("has INTEND");
        let x_pos = text.find("\n    x_0_1_0").expect("x variable present");
        assert!(org < x_pos && x_pos < end, "binary x inside the markers");
        assert!(text.contains(" BV BND"));
    }

    #[test]
    fn roundtrip_reproduces_model_bit_exactly() {
        let inst = crate::instances::toy_instance();
        let model = build_full_model(&inst, Some(2)).unwrap();
        let text = write_mps(&model);
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.name, model.name);
        assert_eq!(back.vars.len(), model.vars.len());
        assert_eq!(back.constraints.len(), model.constraints.len());
        for (a, b) in model.vars.iter().zip(&back.vars) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.obj.to_bits(), b.obj.to_bits(), "objective of {}", a.name);
            assert_eq!(a.lb.to_bits(), b.lb.to_bits());
            assert!(a.ub == b.ub || (a.ub == 1.0 && b.ub == 1.0));
        }
        for (a, b) in model.constraints.iter().zip(&back.constraints) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.sense, b.sense);
            assert_eq!(a.rhs.to_bits(), b.rhs.to_bits(), "rhs of {}", a.name);
            // the reader accumulates terms column-major, so compare as maps
            let canon = |terms: &[(usize, f64)], vars: &[Variable]| {
                let mut v: Vec<(String, u64)> = terms
                    .iter()
                    .map(|&(vi, coef)| (vars[vi].name.clone(), coef.to_bits()))
                    .collect();
                v.sort();
                v
            };
            assert_eq!(
                canon(&a.terms, &model.vars),
                canon(&b.terms, &back.vars),
                "terms of {}",
                a.name
            );
        }
    }

    /// Round-trip stays exact on awkward floats (km/speed conversions).
    #[test]
    fn awkward_coefficients_survive() {
        let v = 177.0 / 88.5_f64;
        let w = 2.259_887_005_649_717_6_f64;
        for value in [v, w, 1e-17, 30.7, f64::MIN_POSITIVE] {
            let s = format_value(value);
            let back: f64 = s.parse().unwrap();
            assert_eq!(value.to_bits(), back.to_bits());
        }
    }
}
