//! MPS (fixed and free) and LP-text writers, plus an MPS reader for
//! round-trip checks.
//!
//! Output is fully deterministic: columns and rows are emitted in index order
//! and numbers use a fixed formatting rule. Semantic names are sanitised and
//! truncated to what each format accepts; the [`NameMap`] sidecar records the
//! mapping back to registry names.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::model::{MilpModel, ObjSense, Sense, VarKind};
use crate::MilpError;

const OBJ_ROW: &str = "OBJ";
const MAX_NAME: usize = 255;
/// Terms per line in LP output; keeps lines well under the 510-char limit.
const LP_TERMS_PER_LINE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Column-positioned MPS with 8-character names and 12-character numbers.
    MpsFixed,
    MpsFree,
    Lp,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::MpsFixed | ExportFormat::MpsFree => "mps",
            ExportFormat::Lp => "lp",
        }
    }
}

impl FromStr for ExportFormat {
    type Err = MilpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mps" | "free-mps" | "mps-free" => Ok(ExportFormat::MpsFree),
            "fixed-mps" | "mps-fixed" => Ok(ExportFormat::MpsFixed),
            "lp" | "lp-text" => Ok(ExportFormat::Lp),
            other => Err(MilpError::UnsupportedFormat(other.to_string())),
        }
    }
}

/// File-level names for every column and row, in model order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameMap {
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    semantic_columns: Vec<String>,
    semantic_rows: Vec<String>,
}

impl NameMap {
    fn build(model: &MilpModel, format: ExportFormat) -> Self {
        let columns = assign_names(model.variables.iter().map(|v| v.name.as_str()), format, 'C');
        let rows = assign_names(model.constraints.iter().map(|c| c.name.as_str()), format, 'R');
        Self {
            columns,
            rows,
            semantic_columns: model.variables.iter().map(|v| v.name.clone()).collect(),
            semantic_rows: model.constraints.iter().map(|c| c.name.clone()).collect(),
        }
    }

    pub fn column_lookup(&self) -> HashMap<&str, usize> {
        self.columns.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
    }

    /// Entries whose file name differs from the registry name.
    pub fn renamed(&self) -> usize {
        let c = self.columns.iter().zip(&self.semantic_columns).filter(|(a, b)| a != b).count();
        let r = self.rows.iter().zip(&self.semantic_rows).filter(|(a, b)| a != b).count();
        c + r
    }

    /// Sidecar CSV: `kind,index,file_name,semantic_name`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,index,file_name,semantic_name\n");
        for (i, (f, s)) in self.columns.iter().zip(&self.semantic_columns).enumerate() {
            let _ = writeln!(out, "column,{i},{},{}", csv_field(f), csv_field(s));
        }
        for (i, (f, s)) in self.rows.iter().zip(&self.semantic_rows).enumerate() {
            let _ = writeln!(out, "row,{i},{},{}", csv_field(f), csv_field(s));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn sanitize(name: &str, format: ExportFormat) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    let first = s.chars().next();
    let bad_start = match first {
        None => true,
        Some(c) => c.is_ascii_digit() || c == '.' || (format == ExportFormat::Lp && (c == 'e' || c == 'E')),
    };
    if bad_start {
        s.insert_str(0, "n_");
    }
    s
}

fn assign_names<'a>(names: impl Iterator<Item = &'a str>, format: ExportFormat, prefix: char) -> Vec<String> {
    let mut used: HashSet<String> = HashSet::new();
    used.insert(OBJ_ROW.to_string());
    names
        .enumerate()
        .map(|(i, name)| {
            let fallback = format!("{prefix}{i:07}");
            if format == ExportFormat::MpsFixed {
                used.insert(fallback.clone());
                return fallback;
            }
            let mut s = sanitize(name, format);
            if s.len() > MAX_NAME {
                s.truncate(MAX_NAME);
            }
            if used.contains(&s) {
                let suffix = format!("~{i}");
                s.truncate(MAX_NAME - suffix.len());
                s.push_str(&suffix);
                if used.contains(&s) {
                    s = fallback;
                }
            }
            used.insert(s.clone());
            s
        })
        .collect()
}

/// Number formatting that round-trips through `f64::from_str`.
fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// At most 12 characters, as required by fixed MPS fields. Lossy for values
/// that need more digits.
fn num12(v: f64) -> String {
    let s = num(v);
    if s.len() <= 12 {
        return s;
    }
    for prec in (0..=10).rev() {
        let t = format!("{v:.prec$e}");
        if t.len() <= 12 {
            return t;
        }
    }
    format!("{v:.0e}")
}

#[derive(Debug, Clone)]
pub struct ExportedModel {
    pub format: ExportFormat,
    pub text: String,
    pub names: NameMap,
}

impl ExportedModel {
    /// Writes the model to `path` and the name map to `<path>.names.csv`.
    /// Returns the sidecar path.
    pub fn write(&self, path: &Path) -> Result<PathBuf, MilpError> {
        fs::write(path, &self.text)?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".names.csv");
        let sidecar = PathBuf::from(sidecar);
        fs::write(&sidecar, self.names.to_csv())?;
        Ok(sidecar)
    }
}

pub fn export_model(model: &MilpModel, format: ExportFormat) -> Result<ExportedModel, MilpError> {
    model.check()?;
    let names = NameMap::build(model, format);
    let text = match format {
        ExportFormat::MpsFixed | ExportFormat::MpsFree => write_mps(model, &names, format == ExportFormat::MpsFixed),
        ExportFormat::Lp => write_lp(model, &names),
    };
    Ok(ExportedModel { format, text, names })
}

/// One data line. Fixed layout uses the classic field columns 2, 5, 15, 25, 40, 50.
fn mps_line(out: &mut String, fixed: bool, f1: &str, f2: &str, pairs: &[(&str, String)]) {
    if fixed {
        let mut line = format!(" {f1:<2} {f2:<8}");
        for (k, (name, val)) in pairs.iter().enumerate() {
            if k == 0 {
                let _ = write!(line, "  {name:<8}  {val:>12}");
            } else {
                let _ = write!(line, "   {name:<8}  {val:>12}");
            }
        }
        out.push_str(line.trim_end());
    } else {
        let _ = write!(out, " {f1:<2} {f2}");
        for (name, val) in pairs {
            let _ = write!(out, "  {name}  {val}");
        }
    }
    out.push('\n');
}

fn write_mps(model: &MilpModel, names: &NameMap, fixed: bool) -> String {
    let fmt = |v: f64| if fixed { num12(v) } else { num(v) };
    let mut out = String::new();
    let model_name = sanitize(&model.name, ExportFormat::MpsFree);
    let model_name = if fixed { model_name.chars().take(8).collect() } else { model_name };
    let _ = writeln!(out, "NAME          {model_name}");
    out.push_str("OBJSENSE\n");
    out.push_str(match model.objective.sense {
        ObjSense::Maximize => "    MAX\n",
        ObjSense::Minimize => "    MIN\n",
    });
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for (c, n) in model.constraints.iter().zip(&names.rows) {
        let t = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {n}");
    }

    // column-major entries
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (r, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            by_col[v.0].push((r, a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, v) in model.variables.iter().enumerate() {
        let integral = v.kind.is_integral();
        if integral != in_int {
            let tag = if integral { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    {:<8}  'MARKER'                 {tag}", format!("MARKER{marker}"));
            marker += 1;
            in_int = integral;
        }
        let mut entries: Vec<(&str, String)> = Vec::new();
        let oc = model.objective.coeffs[j];
        if oc != 0.0 {
            entries.push((OBJ_ROW, fmt(oc)));
        }
        for &(r, a) in &by_col[j] {
            entries.push((names.rows[r].as_str(), fmt(a)));
        }
        if entries.is_empty() {
            entries.push((OBJ_ROW, "0".to_string()));
        }
        for pair in entries.chunks(2) {
            mps_line(&mut out, fixed, "", &names.columns[j], pair);
        }
    }
    if in_int {
        let _ = writeln!(out, "    {:<8}  'MARKER'                 'INTEND'", format!("MARKER{marker}"));
    }

    out.push_str("RHS\n");
    let mut rhs: Vec<(&str, String)> = Vec::new();
    if model.objective.constant != 0.0 {
        rhs.push((OBJ_ROW, fmt(-model.objective.constant)));
    }
    for (c, n) in model.constraints.iter().zip(&names.rows) {
        if c.rhs != 0.0 {
            rhs.push((n.as_str(), fmt(c.rhs)));
        }
    }
    for pair in rhs.chunks(2) {
        mps_line(&mut out, fixed, "", "RHS", pair);
    }

    out.push_str("BOUNDS\n");
    for (v, n) in model.variables.iter().zip(&names.columns) {
        let b = |out: &mut String, t: &str, val: Option<f64>| match val {
            Some(x) => mps_line(out, fixed, t, "BND", &[(n.as_str(), fmt(x))]),
            None => mps_line(out, fixed, t, "BND", &[(n.as_str(), String::new())]),
        };
        let (l, u) = (v.lower, v.upper);
        if l == u {
            b(&mut out, "FX", Some(l));
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            b(&mut out, "FR", None);
            continue;
        }
        if l == f64::NEG_INFINITY {
            b(&mut out, "MI", None);
        } else if l != 0.0 || v.kind.is_integral() {
            b(&mut out, "LO", Some(l));
        }
        if u.is_finite() {
            b(&mut out, "UP", Some(u));
        } else if v.kind.is_integral() {
            b(&mut out, "PL", None);
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn lp_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut count = 0;
    for (a, name) in terms {
        if count > 0 && count % LP_TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let mag = a.abs();
        let coef = if mag == 1.0 { String::new() } else { format!("{} ", num(mag)) };
        if count == 0 {
            let sign = if a < 0.0 { "- " } else { "" };
            let _ = write!(out, " {sign}{coef}{name}");
        } else {
            let _ = write!(out, " {} {coef}{name}", if a < 0.0 { "-" } else { "+" });
        }
        count += 1;
    }
    if count == 0 {
        out.push_str(" 0");
    }
}

fn write_lp(model: &MilpModel, names: &NameMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str(match model.objective.sense {
        ObjSense::Maximize => "Maximize\n",
        ObjSense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    let obj_terms = model
        .objective
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (c, names.columns[j].clone()));
    lp_terms(&mut out, obj_terms);
    let k = model.objective.constant;
    if k != 0.0 {
        let _ = write!(out, " {} {}", if k < 0.0 { "-" } else { "+" }, num(k.abs()));
    }
    out.push_str("\nSubject To\n");
    for (c, n) in model.constraints.iter().zip(&names.rows) {
        let _ = write!(out, " {n}:");
        lp_terms(&mut out, c.terms.iter().map(|&(v, a)| (a, names.columns[v.0].clone())));
        let _ = writeln!(out, " {} {}", c.sense, num(c.rhs));
    }
    out.push_str("Bounds\n");
    let mut binaries = Vec::new();
    let mut generals = Vec::new();
    for (v, n) in model.variables.iter().zip(&names.columns) {
        let (l, u) = (v.lower, v.upper);
        match v.kind {
            VarKind::Binary if l == 0.0 && u == 1.0 => {
                binaries.push(n);
                continue;
            }
            VarKind::Binary | VarKind::Integer => generals.push(n),
            VarKind::Continuous => {}
        }
        if l == u {
            let _ = writeln!(out, " {n} = {}", num(l));
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " {n} free");
        } else {
            let lo = if l == f64::NEG_INFINITY { "-inf".to_string() } else { num(l) };
            if u.is_finite() {
                let _ = writeln!(out, " {lo} <= {n} <= {}", num(u));
            } else if l != 0.0 {
                let _ = writeln!(out, " {n} >= {lo}");
            }
        }
    }
    for (title, list) in [("Binaries", binaries), ("Generals", generals)] {
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in list.chunks(LP_TERMS_PER_LINE) {
            let joined: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", joined.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

/// Reads fixed or free MPS as written by [`export_model`] (and most common
/// producers). Names are whitespace-delimited, so names containing spaces are
/// not supported.
pub fn parse_mps(text: &str) -> Result<MilpModel, MilpError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
    }
    let err = |line: usize, msg: &str| MilpError::Parse(format!("line {}: {msg}", line + 1));
    let number = |s: &str, line: usize| s.parse::<f64>().map_err(|_| err(line, &format!("bad number `{s}`")));

    let mut name = String::from("model");
    let mut sense = ObjSense::Minimize;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_idx: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<(String, bool)> = Vec::new();
    let mut col_idx: HashMap<String, usize> = HashMap::new();
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut obj: HashMap<usize, f64> = HashMap::new();
    let mut rhs: HashMap<usize, f64> = HashMap::new();
    let mut obj_const = 0.0;
    let mut bounds: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut in_int = false;
    let mut section = Section::None;

    for (ln, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match f[0] {
                "NAME" => {
                    if let Some(n) = f.get(1) {
                        name = n.to_string();
                    }
                    Section::None
                }
                "OBJSENSE" => {
                    if let Some(s) = f.get(1) {
                        sense = if s.starts_with("MAX") { ObjSense::Maximize } else { ObjSense::Minimize };
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(err(ln, &format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::ObjSense => {
                sense = if f[0].starts_with("MAX") { ObjSense::Maximize } else { ObjSense::Minimize };
            }
            Section::Rows => {
                if f.len() < 2 {
                    return Err(err(ln, "short ROWS line"));
                }
                let s = match f[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(f[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(err(ln, &format!("row type {t}"))),
                };
                row_idx.insert(f[1].to_string(), rows.len());
                rows.push((f[1].to_string(), s));
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    in_int = f[2] == "'INTORG'";
                    continue;
                }
                if f.len() < 3 || f.len() % 2 == 0 {
                    return Err(err(ln, "malformed COLUMNS line"));
                }
                let j = *col_idx.entry(f[0].to_string()).or_insert_with(|| {
                    cols.push((f[0].to_string(), in_int));
                    cols.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let v = number(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        *obj.entry(j).or_insert(0.0) += v;
                    } else {
                        let r = *row_idx.get(pair[0]).ok_or_else(|| err(ln, &format!("unknown row {}", pair[0])))?;
                        *entries.entry((r, j)).or_insert(0.0) += v;
                    }
                }
            }
            Section::Rhs => {
                let start = if f.len() % 2 == 1 { 1 } else { 0 };
                for pair in f[start..].chunks(2) {
                    if pair.len() < 2 {
                        return Err(err(ln, "malformed RHS line"));
                    }
                    let v = number(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        obj_const = -v;
                    } else {
                        let r = *row_idx.get(pair[0]).ok_or_else(|| err(ln, &format!("unknown row {}", pair[0])))?;
                        rhs.insert(r, v);
                    }
                }
            }
            Section::Ranges => return Err(err(ln, "RANGES not supported")),
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(err(ln, "malformed BOUNDS line"));
                }
                let j = *col_idx.get(f[2]).ok_or_else(|| err(ln, &format!("unknown column {}", f[2])))?;
                let integral = cols[j].1;
                let e = bounds.entry(j).or_insert((0.0, if integral { f64::INFINITY } else { f64::INFINITY }));
                let val = f.get(3).map(|s| number(s, ln)).transpose()?;
                let need = |v: Option<f64>| v.ok_or_else(|| err(ln, "bound value missing"));
                match f[0] {
                    "UP" => e.1 = need(val)?,
                    "LO" => e.0 = need(val)?,
                    "FX" => {
                        let v = need(val)?;
                        *e = (v, v);
                    }
                    "FR" => *e = (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => e.0 = f64::NEG_INFINITY,
                    "PL" => e.1 = f64::INFINITY,
                    "BV" => *e = (0.0, 1.0),
                    "LI" => e.0 = need(val)?,
                    "UI" => e.1 = need(val)?,
                    t => return Err(err(ln, &format!("bound type {t}"))),
                }
            }
            Section::None => return Err(err(ln, "data outside a section")),
        }
    }

    let mut model = MilpModel::new(name, sense);
    for (j, (n, integral)) in cols.iter().enumerate() {
        let (l, u) = bounds.get(&j).copied().unwrap_or((0.0, f64::INFINITY));
        let kind = if !integral {
            VarKind::Continuous
        } else if l >= 0.0 && u <= 1.0 {
            VarKind::Binary
        } else {
            VarKind::Integer
        };
        let v = model.add_var(n.clone(), l, u, kind)?;
        if let Some(&c) = obj.get(&j) {
            model.add_objective_term(v, c);
        }
    }
    let mut row_terms: Vec<Vec<(crate::VarId, f64)>> = vec![Vec::new(); rows.len()];
    for (&(r, j), &a) in &entries {
        row_terms[r].push((crate::VarId(j), a));
    }
    for (r, ((n, s), terms)) in rows.into_iter().zip(row_terms).enumerate() {
        model.add_constraint(n, "imported", terms, s, rhs.get(&r).copied().unwrap_or(0.0))?;
    }
    model.objective.constant = obj_const;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MilpModel, ObjSense, Sense};

    fn sample() -> MilpModel {
        let mut m = MilpModel::new("sample", ObjSense::Maximize);
        let x = m.add_continuous("p_ch[t=0]", 0.0, 1.0).unwrap();
        let y = m.add_continuous("soe[t=0]", -2.5, f64::INFINITY).unwrap();
        let b = m.add_binary("z_cal[t=0,k=1]").unwrap();
        let f = m.add_binary("fixed").unwrap();
        m.set_bounds(f, 0.0, 0.0).unwrap();
        m.add_constraint("row[a]", "f", [(x, 1.0), (y, -0.5), (b, 3.25e-7)], Sense::Le, 2.0)
            .unwrap();
        m.add_constraint("row[b]", "f", [(y, 1.0), (f, 1.0)], Sense::Ge, -1.0).unwrap();
        m.add_objective_term(x, 2.0);
        m.add_objective_term(b, -1e-9);
        m.objective.constant = 12.5;
        m
    }

    #[test]
    fn free_mps_roundtrips_exactly() {
        let m = sample();
        let e = export_model(&m, ExportFormat::MpsFree).unwrap();
        let back = parse_mps(&e.text).unwrap();
        assert_eq!(back.num_vars(), m.num_vars());
        assert_eq!(back.num_rows(), m.num_rows());
        assert_eq!(back.objective.sense, ObjSense::Maximize);
        assert_eq!(back.objective.constant, 12.5);
        assert_eq!(back.objective.coeffs, m.objective.coeffs);
        for (a, b) in back.variables.iter().zip(&m.variables) {
            assert_eq!((a.lower, a.upper, a.kind), (b.lower, b.upper, b.kind));
        }
        for (a, b) in back.constraints.iter().zip(&m.constraints) {
            assert_eq!(a.terms, b.terms);
            assert_eq!((a.sense, a.rhs), (b.sense, b.rhs));
        }
    }

    #[test]
    fn fixed_mps_uses_short_names_and_narrow_fields() {
        let e = export_model(&sample(), ExportFormat::MpsFixed).unwrap();
        assert!(e.names.columns.iter().all(|n| n.len() <= 8));
        assert!(e.names.rows.iter().all(|n| n.len() <= 8));
        let in_data = e.text.lines().skip_while(|l| *l != "COLUMNS").skip(1).take_while(|l| *l != "RHS");
        for line in in_data.filter(|l| !l.contains("MARKER")) {
            // field 4 ends at column 36
            assert!(line.len() <= 61, "{line}");
        }
        let back = parse_mps(&e.text).unwrap();
        assert_eq!(back.num_vars(), 4);
        assert_eq!(back.objective.constant, 12.5);
    }

    #[test]
    fn export_is_byte_deterministic() {
        for f in [ExportFormat::MpsFixed, ExportFormat::MpsFree, ExportFormat::Lp] {
            let a = export_model(&sample(), f).unwrap();
            let b = export_model(&sample(), f).unwrap();
            assert_eq!(a.text, b.text);
            assert_eq!(a.names.to_csv(), b.names.to_csv());
        }
    }

    #[test]
    fn long_names_truncated_with_sidecar_entry() {
        let mut m = MilpModel::new("long", ObjSense::Maximize);
        let long_a = format!("{}a", "x".repeat(300));
        let long_b = format!("{}b", "x".repeat(300));
        m.add_continuous(long_a.clone(), 0.0, 1.0).unwrap();
        m.add_continuous(long_b.clone(), 0.0, 1.0).unwrap();
        let e = export_model(&m, ExportFormat::MpsFree).unwrap();
        assert!(e.names.columns.iter().all(|n| n.len() <= 255));
        assert_ne!(e.names.columns[0], e.names.columns[1]);
        let csv = e.names.to_csv();
        assert!(csv.contains(&long_a) && csv.contains(&long_b));
        assert_eq!(e.names.renamed(), 2);
    }

    #[test]
    fn lp_text_shape() {
        let e = export_model(&sample(), ExportFormat::Lp).unwrap();
        let t = &e.text;
        assert!(t.starts_with("\\ sample\nMaximize\n obj: 2 p_ch_t_0_"));
        assert!(t.contains(" + 12.5\n"));
        assert!(t.contains(" row_a_: p_ch_t_0_ - 0.5 soe_t_0_ + 3.25e-7 z_cal_t_0_k_1_ <= 2\n"));
        assert!(t.contains(" -2.5 <= soe_t_0_") || t.contains(" soe_t_0_ >= -2.5"));
        assert!(t.contains("Binaries\n z_cal_t_0_k_1_\n"));
        assert!(t.contains("Generals\n fixed\n"));
        assert!(t.contains(" fixed = 0\n"));
        assert!(t.ends_with("End\n"));
    }

    #[test]
    fn num12_fits_fixed_fields() {
        for v in [1.0, -0.123456789012345, 1e-300, 123456789012345.0, 0.93, -1.0 / 3.0] {
            let s = num12(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-5 * v.abs(), "{v} -> {s}");
        }
    }

    #[test]
    fn format_names_parse() {
        assert_eq!("lp".parse::<ExportFormat>().unwrap(), ExportFormat::Lp);
        assert_eq!("fixed-mps".parse::<ExportFormat>().unwrap(), ExportFormat::MpsFixed);
        assert!(matches!("xml".parse::<ExportFormat>(), Err(MilpError::UnsupportedFormat(_))));
    }
}
