//! MPS interchange.
//!
//! The writer emits one coefficient per line in the fixed-format field layout
//! (names in columns 5-12 and 15-22, values from column 25). Names are capped
//! at eight characters in fixed format; numbers are written in their shortest
//! round-trip decimal form, which may run past the nominal 12-character value
//! field. The reader splits on whitespace, so it accepts both fixed and free
//! layouts as long as names contain no spaces.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Domain, ModelIR, Sense};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("names collide after truncation to 8 characters: {}", format_collisions(.0))]
    NameCollision(Vec<(String, Vec<String>)>),
    #[error("name `{0}` cannot be written to MPS")]
    InvalidName(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn format_collisions(c: &[(String, Vec<String>)]) -> String {
    c.iter()
        .map(|(short, names)| format!("{short} <- [{}]", names.join(", ")))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MpsFormat {
    #[default]
    Fixed,
    /// No name truncation.
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsRow {
    pub name: String,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsColumn {
    pub name: String,
    pub integer: bool,
    pub lower: f64,
    pub upper: f64,
}

/// The linear program carried by an MPS file, in canonical order: columns in
/// file order, matrix entries sorted by column then row.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsProblem {
    pub name: String,
    pub objective_name: String,
    pub rows: Vec<MpsRow>,
    pub columns: Vec<MpsColumn>,
    /// `(column, coefficient)`.
    pub objective: Vec<(usize, f64)>,
    pub objective_offset: f64,
    /// `(row, column, coefficient)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub ranges: Vec<Option<f64>>,
}

impl MpsProblem {
    /// The problem a model exports to, with names as they appear in `format`.
    pub fn from_model(model: &ModelIR, format: MpsFormat) -> Result<Self, MpsError> {
        let col_names = export_names(model.variables.iter().map(|(_, v)| v.name.as_str()), format)?;
        let row_names = export_names(model.constraints.iter().map(|c| c.name.as_str()), format)?;
        let columns = model
            .variables
            .iter()
            .zip(col_names)
            .map(|((_, v), name)| MpsColumn {
                name,
                integer: v.domain != Domain::Continuous,
                lower: v.lower,
                upper: v.upper,
            })
            .collect();
        let rows = model
            .constraints
            .iter()
            .zip(row_names)
            .map(|(c, name)| MpsRow {
                name,
                sense: c.sense,
            })
            .collect();
        let mut objective: BTreeMap<usize, f64> = BTreeMap::new();
        for &(c, a) in &model.objective {
            *objective.entry(c.0).or_insert(0.0) += a;
        }
        let mut entries: Vec<(usize, usize, f64)> = model
            .constraints
            .iter()
            .enumerate()
            .flat_map(|(r, c)| c.coeffs.iter().map(move |&(col, a)| (r, col.0, a)))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (c, r));
        Ok(Self {
            name: model.name.clone(),
            objective_name: "COST".into(),
            rows,
            columns,
            objective: objective.into_iter().filter(|&(_, a)| a != 0.0).collect(),
            objective_offset: model.objective_offset,
            entries,
            rhs: model.constraints.iter().map(|c| c.rhs).collect(),
            ranges: vec![None; model.constraints.len()],
        })
    }
}

fn export_names<'a>(
    names: impl Iterator<Item = &'a str>,
    format: MpsFormat,
) -> Result<Vec<String>, MpsError> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for name in names {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(MpsError::InvalidName(name.to_string()));
        }
        let short: String = match format {
            MpsFormat::Fixed => name.chars().take(8).collect(),
            MpsFormat::Free => name.to_string(),
        };
        seen.entry(short.clone()).or_default().push(name.to_string());
        out.push(short);
    }
    let collisions: Vec<(String, Vec<String>)> =
        seen.into_iter().filter(|(_, v)| v.len() > 1).collect();
    if collisions.is_empty() {
        Ok(out)
    } else {
        Err(MpsError::NameCollision(collisions))
    }
}

pub(crate) fn num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

fn sense_code(s: Sense) -> &'static str {
    match s {
        Sense::Le => "L",
        Sense::Ge => "G",
        Sense::Eq => "E",
    }
}

/// Fixed-format MPS text for a model.
pub fn export_mps(model: &ModelIR) -> Result<String, MpsError> {
    export_mps_with(model, MpsFormat::Fixed)
}

pub fn export_mps_with(model: &ModelIR, format: MpsFormat) -> Result<String, MpsError> {
    let p = MpsProblem::from_model(model, format)?;
    let mut out = String::new();
    let line = |out: &mut String, a: &str, b: &str, v: f64| {
        writeln!(out, "    {a:<8}  {b:<8}  {:>12}", num(v)).unwrap();
    };

    writeln!(out, "NAME          {}", p.name).unwrap();
    out.push_str("ROWS\n");
    writeln!(out, " N  {}", p.objective_name).unwrap();
    for r in &p.rows {
        writeln!(out, " {:<2} {}", sense_code(r.sense), r.name).unwrap();
    }

    out.push_str("COLUMNS\n");
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.columns.len()];
    for &(r, c, a) in &p.entries {
        by_col[c].push((r, a));
    }
    let objective: HashMap<usize, f64> = p.objective.iter().copied().collect();
    let mut in_int = false;
    let mut marker = 0;
    for (c, col) in p.columns.iter().enumerate() {
        if col.integer != in_int {
            let kind = if col.integer { "'INTORG'" } else { "'INTEND'" };
            writeln!(out, "    MARKER{marker:<4}              'MARKER'                 {kind}").unwrap();
            marker += 1;
            in_int = col.integer;
        }
        if let Some(&a) = objective.get(&c) {
            line(&mut out, &col.name, &p.objective_name, a);
        }
        for &(r, a) in &by_col[c] {
            line(&mut out, &col.name, &p.rows[r].name, a);
        }
        if by_col[c].is_empty() && !objective.contains_key(&c) {
            // keep the column declared even without coefficients
            line(&mut out, &col.name, &p.objective_name, 0.0);
        }
    }
    if in_int {
        writeln!(out, "    MARKER{marker:<4}              'MARKER'                 'INTEND'").unwrap();
    }

    out.push_str("RHS\n");
    if p.objective_offset != 0.0 {
        line(&mut out, "RHS", &p.objective_name, -p.objective_offset);
    }
    for (r, &b) in p.rhs.iter().enumerate() {
        if b != 0.0 {
            line(&mut out, "RHS", &p.rows[r].name, b);
        }
    }

    out.push_str("RANGES\n");
    for (r, range) in p.ranges.iter().enumerate() {
        if let Some(v) = range {
            line(&mut out, "RNG", &p.rows[r].name, *v);
        }
    }

    out.push_str("BOUNDS\n");
    let bound = |out: &mut String, kind: &str, col: &str, v: Option<f64>| match v {
        Some(v) => writeln!(out, " {kind:<2} BND       {col:<8}  {:>12}", num(v)).unwrap(),
        None => writeln!(out, " {kind:<2} BND       {col}").unwrap(),
    };
    for col in &p.columns {
        let (lo, hi) = (col.lower, col.upper);
        if lo == hi {
            bound(&mut out, "FX", &col.name, Some(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            bound(&mut out, "FR", &col.name, None);
            continue;
        }
        if lo == f64::NEG_INFINITY {
            bound(&mut out, "MI", &col.name, None);
        } else if lo != 0.0 {
            bound(&mut out, "LO", &col.name, Some(lo));
        }
        if hi.is_finite() {
            bound(&mut out, "UP", &col.name, Some(hi));
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

fn perr(line: usize, message: impl Into<String>) -> MpsError {
    MpsError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num(line: usize, tok: &str) -> Result<f64, MpsError> {
    tok.parse::<f64>()
        .map_err(|_| perr(line, format!("`{tok}` is not a number")))
}

/// Reads fixed or free MPS text.
pub fn parse_mps(text: &str) -> Result<MpsProblem, MpsError> {
    let mut section = Section::None;
    let mut name = String::new();
    let mut objective_name: Option<String> = None;
    let mut rows: Vec<MpsRow> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut free_rows: Vec<String> = Vec::new();
    let mut columns: Vec<MpsColumn> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut objective: BTreeMap<usize, f64> = BTreeMap::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut ranges: Vec<Option<f64>> = Vec::new();
    let mut objective_offset = 0.0;
    let mut in_int = false;

    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            section = match toks[0] {
                "NAME" => {
                    name = toks.get(1).map(|s| s.to_string()).unwrap_or_default();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(perr(ln, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(perr(ln, "row lines need a type and a name"));
                }
                let sense = match toks[0] {
                    "N" => {
                        if objective_name.is_none() {
                            objective_name = Some(toks[1].to_string());
                        } else {
                            free_rows.push(toks[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(perr(ln, format!("unknown row type `{other}`"))),
                };
                if row_index.insert(toks[1].to_string(), rows.len()).is_some() {
                    return Err(perr(ln, format!("duplicate row `{}`", toks[1])));
                }
                rows.push(MpsRow {
                    name: toks[1].to_string(),
                    sense,
                });
                rhs.push(0.0);
                ranges.push(None);
            }
            Section::Columns => {
                if toks.contains(&"'MARKER'") {
                    match toks.last().copied() {
                        Some("'INTORG'") => in_int = true,
                        Some("'INTEND'") => in_int = false,
                        _ => return Err(perr(ln, "unknown marker")),
                    }
                    continue;
                }
                if toks.len() < 3 || toks.len().is_multiple_of(2) {
                    return Err(perr(ln, "column lines need a name and row/value pairs"));
                }
                let col = match col_index.get(toks[0]) {
                    Some(&c) if c + 1 == columns.len() => c,
                    Some(_) => {
                        return Err(perr(ln, format!("column `{}` is not contiguous", toks[0])))
                    }
                    None => {
                        col_index.insert(toks[0].to_string(), columns.len());
                        columns.push(MpsColumn {
                            name: toks[0].to_string(),
                            integer: in_int,
                            lower: 0.0,
                            upper: f64::INFINITY,
                        });
                        columns.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let value = parse_num(ln, pair[1])?;
                    if Some(pair[0]) == objective_name.as_deref() {
                        *objective.entry(col).or_insert(0.0) += value;
                    } else if free_rows.iter().any(|r| r == pair[0]) {
                        continue;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| perr(ln, format!("unknown row `{}`", pair[0])))?;
                        entries.push((r, col, value));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let pairs = if toks.len() % 2 == 1 { &toks[1..] } else { &toks[..] };
                if pairs.is_empty() {
                    return Err(perr(ln, "expected row/value pairs"));
                }
                for pair in pairs.chunks(2) {
                    let value = parse_num(ln, pair[1])?;
                    if Some(pair[0]) == objective_name.as_deref() {
                        if section == Section::Rhs {
                            objective_offset = -value;
                        }
                        continue;
                    }
                    let r = *row_index
                        .get(pair[0])
                        .ok_or_else(|| perr(ln, format!("unknown row `{}`", pair[0])))?;
                    if section == Section::Rhs {
                        rhs[r] = value;
                    } else {
                        ranges[r] = Some(value);
                    }
                }
            }
            Section::Bounds => {
                let kind = toks[0];
                let needs_value = matches!(kind, "UP" | "LO" | "FX" | "LI" | "UI");
                let (col_tok, value_tok) = match (needs_value, toks.len()) {
                    (true, 4) => (toks[2], Some(toks[3])),
                    (true, 3) => (toks[1], Some(toks[2])),
                    (false, 3) => (toks[2], None),
                    (false, 2) => (toks[1], None),
                    (false, 4) if kind == "BV" => (toks[2], None),
                    _ => return Err(perr(ln, "malformed bound")),
                };
                let c = *col_index
                    .get(col_tok)
                    .ok_or_else(|| perr(ln, format!("unknown column `{col_tok}`")))?;
                let value = value_tok.map(|t| parse_num(ln, t)).transpose()?;
                let col = &mut columns[c];
                match kind {
                    "UP" => col.upper = value.unwrap(),
                    "LO" => col.lower = value.unwrap(),
                    "FX" => {
                        col.lower = value.unwrap();
                        col.upper = col.lower;
                    }
                    "LI" => {
                        col.lower = value.unwrap();
                        col.integer = true;
                    }
                    "UI" => {
                        col.upper = value.unwrap();
                        col.integer = true;
                    }
                    "FR" => {
                        col.lower = f64::NEG_INFINITY;
                        col.upper = f64::INFINITY;
                    }
                    "MI" => col.lower = f64::NEG_INFINITY,
                    "PL" => col.upper = f64::INFINITY,
                    "BV" => {
                        col.lower = 0.0;
                        col.upper = 1.0;
                        col.integer = true;
                    }
                    other => return Err(perr(ln, format!("unknown bound type `{other}`"))),
                }
            }
            Section::None => return Err(perr(ln, "data outside a section")),
            Section::End => return Err(perr(ln, "data after ENDATA")),
        }
    }
    if section != Section::End {
        return Err(perr(text.lines().count(), "missing ENDATA"));
    }
    entries.sort_by_key(|&(r, c, _)| (c, r));
    Ok(MpsProblem {
        name,
        objective_name: objective_name.ok_or_else(|| perr(0, "no objective row"))?,
        rows,
        columns,
        objective: objective.into_iter().filter(|&(_, a)| a != 0.0).collect(),
        objective_offset,
        entries,
        rhs,
        ranges,
    })
}
