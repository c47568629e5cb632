//! MPS writer and a reader for the subset this writer emits.
//!
//! Output uses aligned fixed-width records when every name fits the field
//! width; otherwise the writer falls back to free format and prepends a
//! warning record. Objective sense is always minimize, spelled out in an
//! OBJSENSE section.

use std::collections::HashMap;

use super::{LpError, LpModel, ModelKind, Row, Sense, VarKey};

/// Longest name the aligned record fields accommodate.
const FIXED_NAME_LIMIT: usize = 12;
const FIELD: usize = 14;

fn fmt_num(v: f64) -> String {
    // Shortest round-trip formatting keeps records deterministic.
    format!("{v}")
}

fn sense_tag(sense: Sense) -> &'static str {
    match sense {
        Sense::Le => "L",
        Sense::Eq => "E",
        Sense::Ge => "G",
    }
}

/// Serialize a model to MPS bytes.
pub fn export_mps(model: &LpModel) -> Vec<u8> {
    let col_names: Vec<String> = (0..model.num_vars).map(|c| model.col_name(c)).collect();
    let fixed = col_names.iter().all(|n| n.len() <= FIXED_NAME_LIMIT)
        && model.rows.iter().all(|r| r.name.len() <= FIXED_NAME_LIMIT);

    let mut out = String::new();
    if !fixed {
        log::warn!("mps export: names exceed {FIXED_NAME_LIMIT} characters, using free format");
        out.push_str("* free-format MPS: name length exceeds fixed-format fields\n");
    }

    let record = |out: &mut String, f2: &str, f3: &str, f4: &str| {
        let line = if fixed {
            format!("    {f2:<FIELD$}{f3:<FIELD$}{f4}")
        } else {
            format!("    {f2}  {f3}  {f4}")
        };
        out.push_str(line.trim_end());
        out.push('\n');
    };

    out.push_str(&format!("NAME          {}\n", model.name));
    out.push_str("OBJSENSE\n    MIN\n");
    out.push_str("ROWS\n");
    out.push_str(" N  COST\n");
    for row in &model.rows {
        out.push_str(&format!(" {}  {}\n", sense_tag(row.sense), row.name));
    }

    // Column-major coefficient lists: objective entry first, then rows in
    // model order.
    let mut by_col: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.num_vars];
    for &(c, a) in &model.objective {
        by_col[c].push(("COST", a));
    }
    for row in &model.rows {
        for &(c, a) in &row.coeffs {
            by_col[c].push((row.name.as_str(), a));
        }
    }
    out.push_str("COLUMNS\n");
    for (c, entries) in by_col.iter().enumerate() {
        for &(row_name, a) in entries {
            record(&mut out, &col_names[c], row_name, &fmt_num(a));
        }
    }

    out.push_str("RHS\n");
    for row in &model.rows {
        if row.rhs != 0.0 {
            record(&mut out, "RHS", &row.name, &fmt_num(row.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (c, &(lo, hi)) in model.bounds.iter().enumerate() {
        let name = &col_names[c];
        if lo == hi {
            bound_record(&mut out, fixed, "FX", name, &fmt_num(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY {
            bound_record(&mut out, fixed, "MI", name, "");
        } else if lo != 0.0 {
            bound_record(&mut out, fixed, "LO", name, &fmt_num(lo));
        }
        if hi != f64::INFINITY {
            bound_record(&mut out, fixed, "UP", name, &fmt_num(hi));
        }
    }
    out.push_str("ENDATA\n");
    out.into_bytes()
}

fn bound_record(out: &mut String, fixed: bool, tag: &str, name: &str, value: &str) {
    let line = if fixed {
        format!(" {tag} {:<FIELD$}{name:<FIELD$}{value}", "BND")
    } else {
        format!(" {tag} BND  {name}  {value}")
    };
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Parse MPS bytes produced by [`export_mps`] (or whitespace-separated
/// free-format MPS using the same record subset).
pub fn import_mps(bytes: &[u8]) -> Result<LpModel, LpError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| LpError::MalformedMps(format!("not UTF-8: {e}")))?;

    #[derive(PartialEq)]
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }

    let mut model = LpModel::new(String::new(), ModelKind::Imported, Vec::new(), 0);
    let mut section = Section::None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut objective_row: Option<String> = None;

    fn ensure_col(model: &mut LpModel, index: &mut HashMap<String, usize>, name: &str) -> usize {
        if let Some(&c) = index.get(name) {
            c
        } else {
            let c = model.add_var(VarKey::External(model.num_vars), 0.0, f64::INFINITY);
            index.insert(name.to_string(), c);
            c
        }
    }

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let bad = |msg: String| LpError::MalformedMps(format!("line {}: {msg}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !raw.starts_with(' ') {
            match fields[0] {
                "NAME" => model.name = fields.get(1).unwrap_or(&"").to_string(),
                "OBJSENSE" => section = Section::ObjSense,
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "BOUNDS" => section = Section::Bounds,
                "ENDATA" => section = Section::Done,
                "RANGES" => return Err(bad("RANGES sections are not supported".into())),
                other => return Err(bad(format!("unknown section {other}"))),
            }
            continue;
        }
        let parse_num = |s: &str| -> Result<f64, LpError> {
            s.parse::<f64>()
                .map_err(|_| LpError::MalformedMps(format!("line {}: bad number {s:?}", lineno + 1)))
        };
        match section {
            Section::ObjSense => {
                if !matches!(fields[0], "MIN" | "MINIMIZE") {
                    return Err(bad(format!("unsupported objective sense {}", fields[0])));
                }
            }
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(bad("row record needs a tag and a name".into()));
                }
                let (tag, name) = (fields[0], fields[1]);
                match tag {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(name.to_string());
                        }
                    }
                    "L" | "G" | "E" => {
                        let sense = match tag {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            _ => Sense::Eq,
                        };
                        row_index.insert(name.to_string(), model.rows.len());
                        model.rows.push(Row {
                            name: name.to_string(),
                            coeffs: Vec::new(),
                            sense,
                            rhs: 0.0,
                        });
                    }
                    other => return Err(bad(format!("unknown row tag {other}"))),
                }
            }
            Section::Columns => {
                let col = ensure_col(&mut model, &mut col_index, fields[0]);
                for pair in fields[1..].chunks(2) {
                    let [row_name, value] = pair else {
                        return Err(bad("dangling row/value pair".into()));
                    };
                    let value = parse_num(value)?;
                    if Some(*row_name) == objective_row.as_deref() {
                        model.objective.push((col, value));
                    } else {
                        let &r = row_index
                            .get(*row_name)
                            .ok_or_else(|| bad(format!("unknown row {row_name}")))?;
                        model.rows[r].coeffs.push((col, value));
                    }
                }
            }
            Section::Rhs => {
                for pair in fields[1..].chunks(2) {
                    let [row_name, value] = pair else {
                        return Err(bad("dangling row/value pair".into()));
                    };
                    let &r = row_index
                        .get(*row_name)
                        .ok_or_else(|| bad(format!("unknown row {row_name}")))?;
                    model.rows[r].rhs = parse_num(value)?;
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(bad("bound record too short".into()));
                }
                let (tag, name) = (fields[0], fields[2]);
                let &c = col_index
                    .get(name)
                    .ok_or_else(|| bad(format!("unknown column {name}")))?;
                match tag {
                    "UP" => model.bounds[c].1 = parse_num(fields[3])?,
                    "LO" => model.bounds[c].0 = parse_num(fields[3])?,
                    "FX" => {
                        let v = parse_num(fields[3])?;
                        model.bounds[c] = (v, v);
                    }
                    "MI" => model.bounds[c].0 = f64::NEG_INFINITY,
                    "PL" => model.bounds[c].1 = f64::INFINITY,
                    "BV" => model.bounds[c] = (0.0, 1.0),
                    other => return Err(bad(format!("unsupported bound tag {other}"))),
                }
            }
            Section::None | Section::Done => {
                return Err(bad("data outside any section".into()));
            }
        }
    }
    if section != Section::Done {
        return Err(LpError::MalformedMps("missing ENDATA".into()));
    }
    for row in &mut model.rows {
        row.coeffs.sort_unstable_by_key(|&(c, _)| c);
    }
    model.objective.sort_unstable_by_key(|&(c, _)| c);
    Ok(model)
}

/// Parse a solution file of `<column name> <value>` lines against a model's
/// column names. Missing columns default to zero; unknown names are errors.
pub fn parse_solution_values(model: &LpModel, text: &str) -> Result<Vec<f64>, LpError> {
    let names: HashMap<String, usize> = (0..model.num_vars)
        .map(|c| (model.col_name(c), c))
        .collect();
    let mut values = vec![0.0; model.num_vars];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('*') {
            continue;
        }
        let mut it = line.split_whitespace();
        let name = it.next().unwrap();
        let value = it.next().ok_or_else(|| {
            LpError::MalformedSolution(format!("line {}: missing value", lineno + 1))
        })?;
        let &c = names.get(name).ok_or_else(|| {
            LpError::MalformedSolution(format!("line {}: unknown column {name}", lineno + 1))
        })?;
        values[c] = value.parse::<f64>().map_err(|_| {
            LpError::MalformedSolution(format!("line {}: bad number {value:?}", lineno + 1))
        })?;
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, School};
    use crate::lp::build_lp3s;
    use crate::schedule::HorizonMode;

    #[test]
    fn golden_tiny_export() {
        let inst = Instance::new(2, vec![School::new(0, vec![1])]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        let text = String::from_utf8(export_mps(&model)).unwrap();
        let expected = "\
NAME          SBSP_LP3S
OBJSENSE
    MIN
ROWS
 N  COST
 L  R3f_0_0_2
 E  R3g_0_0
 L  R3i_1
 L  R3i_2
COLUMNS
    S_0_0_1       R3f_0_0_2     1
    S_0_0_1       R3i_1         1
    S_0_0_1       R3i_2         -1
    S_0_0_2       R3f_0_0_2     -1
    S_0_0_2       R3g_0_0       1
    S_0_0_2       R3i_2         1
    z             COST          1
    z             R3i_1         -1
    z             R3i_2         -1
RHS
    RHS           R3g_0_0       1
BOUNDS
 UP BND           S_0_0_1       1
 UP BND           S_0_0_2       1
ENDATA
";
        assert_eq!(text, expected);
    }

    #[test]
    fn roundtrip_preserves_structure() {
        let inst =
            Instance::new(3, vec![School::new(1, vec![1, 2]), School::new(0, vec![3])]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        let back = import_mps(&export_mps(&model)).unwrap();
        assert_eq!(back.num_vars, model.num_vars);
        assert_eq!(back.num_rows(), model.num_rows());
        assert_eq!(back.nonzeros(), model.nonzeros());
        for (a, b) in model.rows.iter().zip(&back.rows) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.sense, b.sense);
            assert_eq!(a.rhs, b.rhs);
            assert_eq!(a.coeffs, b.coeffs);
        }
        assert_eq!(back.bounds, model.bounds);
        assert_eq!(back.objective, model.objective);
    }

    #[test]
    fn no_window_rows_still_valid() {
        let inst = Instance::new(2, vec![School::new(1, vec![1, 1])]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        assert_eq!(model.row_tallies().get("R3e"), None);
        let back = import_mps(&export_mps(&model)).unwrap();
        assert_eq!(back.num_rows(), model.num_rows());
    }

    #[test]
    fn wide_names_switch_to_free_format() {
        // Two-digit indices everywhere push window-row names past the field.
        let inst = Instance::new(12, vec![School::new(2, vec![1; 11]); 11]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        let bytes = export_mps(&model);
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.starts_with("* free-format MPS"));
        let back = import_mps(&bytes).unwrap();
        assert_eq!(back.num_rows(), model.num_rows());
        assert_eq!(back.nonzeros(), model.nonzeros());
    }

    #[test]
    fn solution_file_parsing() {
        let inst = Instance::new(2, vec![School::new(0, vec![1])]).unwrap();
        let model = build_lp3s(&inst, HorizonMode::Paper).unwrap();
        let values = parse_solution_values(&model, "# comment\nS_0_0_1 0.25\nz 1\n").unwrap();
        assert_eq!(values, vec![0.25, 0.0, 1.0]);
        assert!(parse_solution_values(&model, "nope 1\n").is_err());
    }
}
