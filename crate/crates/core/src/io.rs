//! QPS subset reader/writer, conversion to standard form, CSV reports.
//!
//! Accepted QPS files are free format with the sections `NAME`, `ROWS`,
//! `COLUMNS`, `RHS`, optional `BOUNDS`, optional `QUADOBJ` and `ENDATA`, in
//! that order. `QUADOBJ` lists the lower triangle of `Q` in `½xᵀQx`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::linalg::{DenseMatrix, Vector};
use crate::model::StandardQP;
use crate::{Error, Result};

/// Row type of a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// Bounds on one variable; the QPS default is `[0, +∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }
}

/// A parsed QPS file, before any reformulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawQP {
    pub name: String,
    pub objective_row: String,
    pub rows: Vec<(String, RowSense)>,
    pub columns: Vec<String>,
    /// Constraint coefficients `(row, column, value)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub objective: Vec<f64>,
    /// Constant term of the objective (minus the RHS of the objective row).
    pub objective_constant: f64,
    pub rhs: Vec<f64>,
    pub bounds: Vec<Bounds>,
    /// Full symmetric `Q`.
    pub quadratic: DenseMatrix,
}

impl RawQP {
    pub fn constraint_matrix(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.rows.len(), self.columns.len());
        for &(r, c, v) in &self.entries {
            a[(r, c)] += v;
        }
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Name,
    Rows,
    Columns,
    Rhs,
    Bounds,
    QuadObj,
    End,
}

fn parse_err(line: usize, token: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        token: token.to_string(),
        message: message.into(),
    }
}

fn number(line: usize, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, token, "expected a finite number"))
}

/// Parses the QPS subset described in the module docs.
pub fn parse_qps(text: &str) -> Result<RawQP> {
    let mut section = Section::Start;
    let mut name = String::new();
    let mut objective_row: Option<String> = None;
    let mut rows: Vec<(String, RowSense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut columns: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut constant = 0.0;
    let mut rhs: Vec<f64> = Vec::new();
    let mut bounds: Vec<Bounds> = Vec::new();
    let mut quad: HashMap<(usize, usize), f64> = HashMap::new();

    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let header = !raw.starts_with(char::is_whitespace);
        if header {
            let next = match tokens[0] {
                "NAME" => Section::Name,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "QUADOBJ" => Section::QuadObj,
                "ENDATA" => Section::End,
                other => return Err(Error::UnsupportedSection(other.to_string())),
            };
            if next <= section {
                return Err(parse_err(ln, tokens[0], "section out of order"));
            }
            if next > Section::Columns && section < Section::Columns {
                return Err(parse_err(ln, tokens[0], "COLUMNS section missing"));
            }
            if next == Section::Name {
                name = tokens.get(1..).map(|t| t.join(" ")).unwrap_or_default();
            }
            if next == Section::Columns {
                rhs = vec![0.0; rows.len()];
            }
            section = next;
            continue;
        }
        match section {
            Section::Start | Section::Name | Section::End => {
                return Err(parse_err(ln, tokens[0], "data outside a section"));
            }
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(parse_err(ln, tokens[0], "expected `<type> <row>`"));
                }
                let row = tokens[1].to_string();
                if row_index.contains_key(&row) || objective_row.as_deref() == Some(tokens[1]) {
                    return Err(parse_err(ln, tokens[1], "duplicate row"));
                }
                let sense = match tokens[0] {
                    "N" => {
                        if objective_row.is_some() {
                            return Err(parse_err(ln, tokens[1], "second objective row"));
                        }
                        objective_row = Some(row);
                        continue;
                    }
                    "E" => RowSense::Eq,
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    other => return Err(parse_err(ln, other, "unknown row type")),
                };
                row_index.insert(row.clone(), rows.len());
                rows.push((row, sense));
            }
            Section::Columns => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(parse_err(
                        ln,
                        tokens[0],
                        "expected `<col> <row> <value> [<row> <value>]`",
                    ));
                }
                let col = match col_index.get(tokens[0]) {
                    Some(&j) => j,
                    None => {
                        let j = columns.len();
                        col_index.insert(tokens[0].to_string(), j);
                        columns.push(tokens[0].to_string());
                        objective.push(0.0);
                        bounds.push(Bounds::default());
                        j
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let v = number(ln, pair[1])?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        objective[col] += v;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| parse_err(ln, pair[0], "undefined row"))?;
                        entries.push((r, col, v));
                    }
                }
            }
            Section::Rhs => {
                // The set name is optional.
                let body = if tokens.len() % 2 == 1 {
                    &tokens[1..]
                } else {
                    &tokens[..]
                };
                if body.is_empty() || body.len() > 4 {
                    return Err(parse_err(
                        ln,
                        tokens[0],
                        "expected `[set] <row> <value> [<row> <value>]`",
                    ));
                }
                for pair in body.chunks(2) {
                    let v = number(ln, pair[1])?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        constant = -v;
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| parse_err(ln, pair[0], "undefined row"))?;
                        rhs[r] = v;
                    }
                }
            }
            Section::Bounds => {
                let kind = tokens[0];
                let valued = !matches!(kind, "FR" | "MI" | "PL");
                let want = if valued { 3 } else { 2 };
                let body = match tokens.len() - 1 {
                    n if n == want => &tokens[1..],
                    n if n == want - 1 => &tokens[..],
                    _ => return Err(parse_err(ln, kind, "malformed bound")),
                };
                // body[0] is the set name or the bound type when the set is omitted.
                let col_tok = body[1];
                let j = *col_index
                    .get(col_tok)
                    .ok_or_else(|| parse_err(ln, col_tok, "undefined column"))?;
                let value = if valued { number(ln, body[2])? } else { 0.0 };
                let bd = &mut bounds[j];
                match kind {
                    "UP" => bd.upper = value,
                    "LO" => bd.lower = value,
                    "FX" => {
                        bd.lower = value;
                        bd.upper = value;
                    }
                    "FR" => {
                        bd.lower = f64::NEG_INFINITY;
                        bd.upper = f64::INFINITY;
                    }
                    "MI" => bd.lower = f64::NEG_INFINITY,
                    "PL" => bd.upper = f64::INFINITY,
                    other => return Err(parse_err(ln, other, "unsupported bound type")),
                }
            }
            Section::QuadObj => {
                if tokens.len() != 3 {
                    return Err(parse_err(ln, tokens[0], "expected `<col> <col> <value>`"));
                }
                let lookup = |t: &str| {
                    col_index
                        .get(t)
                        .copied()
                        .ok_or_else(|| parse_err(ln, t, "undefined column"))
                };
                let (i, j) = (lookup(tokens[0])?, lookup(tokens[1])?);
                let v = number(ln, tokens[2])?;
                let key = (i.max(j), i.min(j));
                if quad.insert(key, v).is_some() {
                    return Err(parse_err(ln, tokens[1], "duplicate quadratic entry"));
                }
            }
        }
    }
    if section != Section::End {
        return Err(parse_err(text.lines().count(), "", "missing ENDATA"));
    }
    let objective_row = objective_row.ok_or_else(|| parse_err(0, "", "no objective row"))?;
    let n = columns.len();
    let mut quadratic = DenseMatrix::zeros(n, n);
    for (&(i, j), &v) in &quad {
        quadratic[(i, j)] = v;
        quadratic[(j, i)] = v;
    }
    Ok(RawQP {
        name,
        objective_row,
        rows,
        columns,
        entries,
        objective,
        objective_constant: constant,
        rhs,
        bounds,
        quadratic,
    })
}

/// Where a standard-form column came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnOrigin {
    /// Original variable `x = x' + shift`.
    Original { index: usize, shift: f64 },
    /// Slack (`+`) or surplus (`−`) of an inequality row.
    RowSlack { row: usize },
    /// Slack of the row `x'_j ≤ u_j − l_j`.
    UpperSlack { column: usize },
}

/// Bookkeeping between a [`RawQP`] and its standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardMapping {
    pub origins: Vec<ColumnOrigin>,
    /// Constant added to the standard-form objective to get the original one.
    pub offset: f64,
    /// Number of original variables.
    pub original_n: usize,
}

impl StandardMapping {
    /// Original variable values from a standard-form point.
    pub fn recover(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(self.original_n);
        for (k, origin) in self.origins.iter().enumerate() {
            if let ColumnOrigin::Original { index, shift } = *origin {
                out[index] = x[k] + shift;
            }
        }
        out
    }

    pub fn original_objective(&self, qp: &StandardQP, x: &Vector) -> f64 {
        qp.objective(x) + self.offset
    }

    /// Positions of the original variables in the standard form.
    pub fn original_columns(&self) -> Vec<usize> {
        (0..self.origins.len())
            .filter(|&k| matches!(self.origins[k], ColumnOrigin::Original { .. }))
            .collect()
    }
}

/// Rewrites `raw` as `min ½xᵀHx + cᵀx, Ax = b, x ≥ 0`.
///
/// Lower bounds are shifted to zero, finite upper bounds become extra rows and
/// every inequality row gets a slack column. Free variables are rejected.
pub fn to_standard_form(raw: &RawQP) -> Result<(StandardQP, StandardMapping)> {
    let n0 = raw.columns.len();
    let mut shift = Vector::zeros(n0);
    for (j, bd) in raw.bounds.iter().enumerate() {
        if !bd.lower.is_finite() {
            return Err(Error::Conversion(format!(
                "variable {} has no finite lower bound",
                raw.columns[j]
            )));
        }
        if bd.lower > bd.upper {
            return Err(Error::Conversion(format!(
                "variable {} has lower bound {} above upper bound {}",
                raw.columns[j], bd.lower, bd.upper
            )));
        }
        shift[j] = bd.lower;
    }
    let upper: Vec<usize> = (0..n0)
        .filter(|&j| raw.bounds[j].upper.is_finite())
        .collect();
    let slack_rows: Vec<usize> = (0..raw.rows.len())
        .filter(|&r| raw.rows[r].1 != RowSense::Eq)
        .collect();

    let a0 = raw.constraint_matrix();
    let m = raw.rows.len() + upper.len();
    let n = n0 + slack_rows.len() + upper.len();
    let mut a = DenseMatrix::zeros(m, n);
    let mut b = Vector::zeros(m);
    let mut h = DenseMatrix::zeros(n, n);
    let mut c = Vector::zeros(n);

    a.view_mut((0, 0), (raw.rows.len(), n0)).copy_from(&a0);
    let rhs = Vector::from_vec(raw.rhs.clone());
    b.rows_mut(0, raw.rows.len())
        .copy_from(&(rhs - &a0 * &shift));
    h.view_mut((0, 0), (n0, n0)).copy_from(&raw.quadratic);
    let c0 = Vector::from_vec(raw.objective.clone());
    c.rows_mut(0, n0)
        .copy_from(&(&c0 + &raw.quadratic * &shift));
    let offset =
        raw.objective_constant + c0.dot(&shift) + 0.5 * shift.dot(&(&raw.quadratic * &shift));

    let mut origins: Vec<ColumnOrigin> = (0..n0)
        .map(|index| ColumnOrigin::Original {
            index,
            shift: shift[index],
        })
        .collect();
    for (k, &r) in slack_rows.iter().enumerate() {
        a[(r, n0 + k)] = if raw.rows[r].1 == RowSense::Le {
            1.0
        } else {
            -1.0
        };
        origins.push(ColumnOrigin::RowSlack { row: r });
    }
    for (k, &j) in upper.iter().enumerate() {
        let row = raw.rows.len() + k;
        let col = n0 + slack_rows.len() + k;
        a[(row, j)] = 1.0;
        a[(row, col)] = 1.0;
        b[row] = raw.bounds[j].upper - shift[j];
        origins.push(ColumnOrigin::UpperSlack { column: j });
    }
    let qp = StandardQP::new(raw.name.clone(), h, a, b, c)?;
    Ok((
        qp,
        StandardMapping {
            origins,
            offset,
            original_n: n0,
        },
    ))
}

/// Serialises a standard-form problem as QPS (all rows `E`, default bounds).
/// Values use the shortest representation that parses back exactly.
pub fn write_qps(qp: &StandardQP) -> String {
    let name = if qp.name().is_empty() {
        "QP"
    } else {
        qp.name()
    };
    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n N OBJ\n");
    for i in 0..qp.m() {
        let _ = writeln!(out, " E R{}", i + 1);
    }
    out.push_str("COLUMNS\n");
    for j in 0..qp.n() {
        if qp.c()[j] != 0.0 {
            let _ = writeln!(out, " C{} OBJ {:?}", j + 1, qp.c()[j]);
        }
        let mut any = qp.c()[j] != 0.0;
        for i in 0..qp.m() {
            let v = qp.a()[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, " C{} R{} {:?}", j + 1, i + 1, v);
                any = true;
            }
        }
        if !any {
            // keeps the column declared
            let _ = writeln!(out, " C{} OBJ 0.0", j + 1);
        }
    }
    out.push_str("RHS\n");
    for i in 0..qp.m() {
        if qp.b()[i] != 0.0 {
            let _ = writeln!(out, " RHS R{} {:?}", i + 1, qp.b()[i]);
        }
    }
    let quad: Vec<(usize, usize)> = (0..qp.n())
        .flat_map(|j| (j..qp.n()).map(move |i| (i, j)))
        .filter(|&(i, j)| qp.h()[(i, j)] != 0.0)
        .collect();
    if !quad.is_empty() {
        out.push_str("QUADOBJ\n");
        for (i, j) in quad {
            let _ = writeln!(out, " C{} C{} {:?}", i + 1, j + 1, qp.h()[(i, j)]);
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Reads and converts a QPS file in one go.
pub fn read_qps_file(path: &Path) -> Result<(StandardQP, StandardMapping)> {
    let text = std::fs::read_to_string(path)?;
    to_standard_form(&parse_qps(&text)?)
}

/// One line of the crossover table.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverRecord {
    pub name: String,
    pub m: usize,
    pub n: usize,
    /// `None` when the instance failed; the row is then written with `NA`.
    pub result: Option<CrossoverFigures>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverFigures {
    pub mu_lambda: f64,
    pub mu: f64,
    pub ipm_iterations: usize,
    pub active_iterations_per: usize,
    pub active_iterations_unp: usize,
    pub feasibility_error_per: f64,
    pub feasibility_error_unp: f64,
    pub objective_error_per: f64,
    pub objective_error_unp: f64,
}

impl CrossoverFigures {
    fn values(&self) -> [f64; 9] {
        [
            self.mu_lambda,
            self.mu,
            self.ipm_iterations as f64,
            self.active_iterations_per as f64,
            self.active_iterations_unp as f64,
            self.feasibility_error_per,
            self.feasibility_error_unp,
            self.objective_error_per,
            self.objective_error_unp,
        ]
    }
}

pub const REPORT_HEADER: [&str; 12] = [
    "Probs",
    "m",
    "n",
    "mu_lambda_K",
    "mu_K",
    "IPM Itr",
    "actvItr Per",
    "actvItr Unp",
    "feaErr Per",
    "feaErr Unp",
    "relObjErr Per",
    "relObjErr Unp",
];

/// `1.5e-12` style: one decimal in the mantissa.
pub fn sci(v: f64) -> String {
    format!("{v:.1e}")
}

/// Nearest-rank percentile (`q` in `[0, 1]`) of a non-empty sample.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

fn aggregate_row(label: &str, stats: [f64; 9]) -> Vec<String> {
    let mut row = vec![label.to_string(), String::new(), String::new()];
    for (k, v) in stats.iter().enumerate() {
        row.push(if (2..5).contains(&k) {
            format!("{v:.1}")
        } else {
            sci(*v)
        });
    }
    row
}

/// Writes the crossover table. Failed rows carry `NA`; the trailing
/// `Average` and `90th Pctl` rows are over the successful rows only.
pub fn write_report<W: std::io::Write>(records: &[CrossoverRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(REPORT_HEADER)
        .map_err(std::io::Error::from)?;
    let mut ok: Vec<[f64; 9]> = Vec::new();
    for r in records {
        let mut row = vec![r.name.clone(), r.m.to_string(), r.n.to_string()];
        match &r.result {
            Some(f) => {
                row.extend([sci(f.mu_lambda), sci(f.mu)]);
                row.extend(
                    [
                        f.ipm_iterations,
                        f.active_iterations_per,
                        f.active_iterations_unp,
                    ]
                    .map(|v| v.to_string()),
                );
                row.extend(
                    [
                        f.feasibility_error_per,
                        f.feasibility_error_unp,
                        f.objective_error_per,
                        f.objective_error_unp,
                    ]
                    .map(sci),
                );
                ok.push(f.values());
            }
            None => row.extend(std::iter::repeat_n("NA".to_string(), 9)),
        }
        out.write_record(&row).map_err(std::io::Error::from)?;
    }
    if !ok.is_empty() {
        let column = |k: usize| ok.iter().map(|v| v[k]).collect::<Vec<_>>();
        let mean: [f64; 9] =
            std::array::from_fn(|k| column(k).iter().sum::<f64>() / ok.len() as f64);
        let p90: [f64; 9] = std::array::from_fn(|k| percentile(&column(k), 0.9));
        out.write_record(aggregate_row("Average", mean))
            .map_err(std::io::Error::from)?;
        out.write_record(aggregate_row("90th Pctl", p90))
            .map_err(std::io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_report_csv(records: &[CrossoverRecord], path: &Path) -> Result<()> {
    write_report(records, std::fs::File::create(path)?)
}

/// One stop iteration of the prediction-ratio sweep, averaged over instances.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub k: usize,
    pub false_per: f64,
    pub missed_per: f64,
    pub correction_per: f64,
    pub false_unp: f64,
    pub missed_unp: f64,
    pub correction_unp: f64,
    pub log10_residual_per: f64,
    pub log10_residual_unp: f64,
    pub n_ok: usize,
}

pub const RATIO_HEADER: [&str; 10] = [
    "K",
    "falsePer",
    "missPer",
    "corrPer",
    "falseUnp",
    "missUnp",
    "corrUnp",
    "log10ResPer",
    "log10ResUnp",
    "n_ok",
];

pub fn write_ratios<W: std::io::Write>(rows: &[RatioRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(RATIO_HEADER)
        .map_err(std::io::Error::from)?;
    for r in rows {
        let mut rec = vec![r.k.to_string()];
        rec.extend(
            [
                r.false_per,
                r.missed_per,
                r.correction_per,
                r.false_unp,
                r.missed_unp,
                r.correction_unp,
            ]
            .map(|v| format!("{v:.6}")),
        );
        rec.extend([r.log10_residual_per, r.log10_residual_unp].map(|v| format!("{v:.4}")));
        rec.push(r.n_ok.to_string());
        out.write_record(&rec).map_err(std::io::Error::from)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_ratio_csv(rows: &[RatioRow], path: &Path) -> Result<()> {
    write_ratios(rows, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{dq1, m, v};

    const DQ1: &str = "\
NAME DQ1
ROWS
 N COST
 E C1
COLUMNS
 X1 C1 1.0
 X2 C1 1.0
RHS
 RHS C1 1.0
QUADOBJ
 X1 X1 1.0
 X2 X2 1.0
ENDATA
";

    #[test]
    fn dq1_fixture() {
        let raw = parse_qps(DQ1).unwrap();
        assert_eq!(raw.name, "DQ1");
        let (qp, map) = to_standard_form(&raw).unwrap();
        let want = dq1();
        assert_eq!(qp.h(), want.h());
        assert_eq!(qp.a(), want.a());
        assert_eq!(qp.b(), want.b());
        assert_eq!(qp.c(), want.c());
        assert_eq!(map.offset, 0.0);
    }

    #[test]
    fn lp_without_quadobj() {
        let text = DQ1.replace("QUADOBJ\n X1 X1 1.0\n X2 X2 1.0\n", "");
        let raw = parse_qps(&text).unwrap();
        assert_eq!(raw.quadratic, DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn rejected_inputs() {
        let ranges = DQ1.replace("QUADOBJ", "RANGES");
        assert!(matches!(parse_qps(&ranges), Err(Error::UnsupportedSection(s)) if s == "RANGES"));
        let objsense = format!("OBJSENSE\n MAX\n{DQ1}");
        assert!(matches!(
            parse_qps(&objsense),
            Err(Error::UnsupportedSection(_))
        ));
        let dup = DQ1.replace(" X2 X2 1.0\n", " X2 X2 1.0\n X2 X2 3.0\n");
        assert!(matches!(
            parse_qps(&dup),
            Err(Error::Parse { line: 13, .. })
        ));
        let undefined = DQ1.replace(" X2 C1 1.0", " X2 C9 1.0");
        assert!(
            matches!(parse_qps(&undefined), Err(Error::Parse { line: 7, token, .. }) if token == "C9")
        );
    }

    #[test]
    fn slacks_and_shifts() {
        let text = "\
NAME T
ROWS
 N OBJ
 L R1
 G R2
COLUMNS
 X R1 1.0 R2 1.0
 X OBJ 3.0
 Y R1 1.0
RHS
 RHS R1 10.0 R2 1.0
BOUNDS
 LO BND X 2.0
 UP BND Y 4.0
ENDATA
";
        let (qp, map) = to_standard_form(&parse_qps(text).unwrap()).unwrap();
        // columns: X', Y, s1, s2, u_Y ; rows: R1, R2, Y ≤ 4
        assert_eq!((qp.m(), qp.n()), (3, 5));
        assert_eq!(
            *qp.a(),
            m(
                3,
                5,
                &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]
            )
        );
        assert_eq!(*qp.b(), v(&[8.0, -1.0, 4.0]));
        assert_eq!(map.offset, 6.0);
        let x = v(&[1.0, 2.0, 5.0, 2.0, 2.0]);
        assert_eq!(map.recover(&x), v(&[3.0, 2.0]));
        assert_eq!(map.original_objective(&qp, &x), 9.0);
    }

    #[test]
    fn bad_bounds() {
        let free = DQ1.replace("QUADOBJ", "BOUNDS\n FR BND X1\nQUADOBJ");
        assert!(matches!(
            to_standard_form(&parse_qps(&free).unwrap()),
            Err(Error::Conversion(_))
        ));
        let crossed = DQ1.replace("QUADOBJ", "BOUNDS\n LO BND X1 2\n UP BND X1 1\nQUADOBJ");
        assert!(matches!(
            to_standard_form(&parse_qps(&crossed).unwrap()),
            Err(Error::Conversion(_))
        ));
    }

    #[test]
    fn writer_round_trip() {
        let qp = dq1();
        let (back, _) = to_standard_form(&parse_qps(&write_qps(&qp)).unwrap()).unwrap();
        assert_eq!(back.h(), qp.h());
        assert_eq!(back.a(), qp.a());
        assert_eq!(back.b(), qp.b());
        assert_eq!(back.c(), qp.c());
    }

    fn record() -> CrossoverRecord {
        CrossoverRecord {
            name: "QP_X".into(),
            m: 3,
            n: 5,
            result: Some(CrossoverFigures {
                mu_lambda: 4.2e-4,
                mu: 3.9e-4,
                ipm_iterations: 11,
                active_iterations_per: 2,
                active_iterations_unp: 4,
                feasibility_error_per: 1.5e-12,
                feasibility_error_unp: 0.0,
                objective_error_per: 2.24e-9,
                objective_error_unp: 1e-7,
            }),
        }
    }

    #[test]
    fn report_schema() {
        let mut buf = Vec::new();
        write_report(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "Probs,m,n,mu_lambda_K,mu_K,IPM Itr,actvItr Per,actvItr Unp,feaErr Per,feaErr Unp,relObjErr Per,relObjErr Unp\n"
        );

        let mut buf = Vec::new();
        write_report(&[record()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[1],
            "QP_X,3,5,4.2e-4,3.9e-4,11,2,4,1.5e-12,0.0e0,2.2e-9,1.0e-7"
        );
        assert_eq!(lines[1].split(',').count(), 12);
        assert_eq!(
            lines[2],
            "Average,,,4.2e-4,3.9e-4,11.0,2.0,4.0,1.5e-12,0.0e0,2.2e-9,1.0e-7"
        );
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn failed_rows_are_excluded() {
        let failed = CrossoverRecord {
            result: None,
            ..record()
        };
        let mut buf = Vec::new();
        write_report(&[failed.clone(), record()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("QP_X,3,5,NA,NA,NA,NA,NA,NA,NA,NA,NA\n"));
        assert!(text.contains("Average,,,4.2e-4"));
        let mut buf = Vec::new();
        write_report(&[failed], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn percentiles() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&xs, 0.9), 9.0);
        assert_eq!(percentile(&[3.0], 0.9), 3.0);
        assert_eq!(sci(1.5e-12), "1.5e-12");
    }

    #[test]
    fn ratio_schema() {
        let row = RatioRow {
            k: 10,
            false_per: 0.0,
            missed_per: 0.25,
            correction_per: 0.75,
            false_unp: 0.0,
            missed_unp: 0.5,
            correction_unp: 0.5,
            log10_residual_per: -5.0,
            log10_residual_unp: -4.5,
            n_ok: 5,
        };
        let mut buf = Vec::new();
        write_ratios(&[row], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "K,falsePer,missPer,corrPer,falseUnp,missUnp,corrUnp,log10ResPer,log10ResUnp,n_ok\n\
             10,0.000000,0.250000,0.750000,0.000000,0.500000,0.500000,-5.0000,-4.5000,5\n"
        );
    }
}
