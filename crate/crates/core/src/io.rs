//! Delimited-text input and output.
//!
//! Curve files are wide: a header row of unit labels, a time column and one
//! column per unit, optionally preceded by a `replicate` column. Metadata
//! files list `unit,group,covariate`. Output tables start with `#` comment
//! lines recording how they were produced, followed by a header row.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{Error, Result};
use crate::flm::GroupLayout;
use crate::fourier::{CurveSet, Grid};

/// Curves read from a file, on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCurves {
    pub curves: CurveSet,
    /// Unit labels in column order.
    pub units: Vec<String>,
    /// Whether any replicate was interpolated onto the grid.
    pub interpolated: bool,
}

/// Relative tolerance, in grid spacings, for treating time points as equal.
const GRID_MATCH_TOL: f64 = 1e-9;

/// Reads a curve file; see [`parse_curves`].
pub fn load_curves(path: &Path, target: Option<Grid>) -> Result<LoadedCurves> {
    let file = File::open(path).map_err(|e| Error::Io(e).context(format!("opening {}", path.display())))?;
    parse_curves(file, target)
}

fn parse_cell(record: &StringRecord, line: usize, column: usize) -> Result<f64> {
    let cell = record.get(column).unwrap_or("");
    let value: f64 = cell.parse().map_err(|_| Error::Parse {
        row: line,
        column: column + 1,
        message: format!("'{cell}' is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            row: line,
            column: column + 1,
            message: format!("'{cell}' is not finite"),
        });
    }
    Ok(value)
}

struct Block {
    times: Vec<f64>,
    /// `values[k]` is unit `k`'s series.
    values: Vec<Vec<f64>>,
}

/// Parses wide curve data and places it on a uniform grid.
///
/// Without `target`, the grid is the uniform grid spanned by the first
/// replicate's times, with the same number of points. A replicate whose
/// times already coincide with the grid is copied unchanged; otherwise it is
/// linearly interpolated, holding end values constant outside its range.
/// Row numbers in errors are file line numbers (the header is line 1).
pub fn parse_curves<R: Read>(reader: R, target: Option<Grid>) -> Result<LoadedCurves> {
    let mut rdr = ReaderBuilder::new().trim(Trim::All).comment(Some(b'#')).from_reader(reader);
    let header = rdr.headers()?.clone();
    let has_replicate = header.get(0).is_some_and(|h| h.eq_ignore_ascii_case("replicate"));
    let first_unit = if has_replicate { 2 } else { 1 };
    if header.len() <= first_unit {
        return Err(Error::Parse {
            row: 1,
            column: header.len().max(1),
            message: "header needs a time column and at least one unit column".into(),
        });
    }
    let units: Vec<String> = header.iter().skip(first_unit).map(str::to_string).collect();
    let n_units = units.len();

    let mut blocks: Vec<Block> = Vec::new();
    let mut current_rep: Option<String> = None;
    let mut seen_reps: Vec<String> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let rep = if has_replicate {
            Some(record.get(0).unwrap_or("").to_string())
        } else {
            None
        };
        if blocks.is_empty() || rep != current_rep {
            if let Some(r) = &rep {
                if seen_reps.contains(r) {
                    return Err(Error::Parse {
                        row: line,
                        column: 1,
                        message: format!("rows of replicate '{r}' are not contiguous"),
                    });
                }
                seen_reps.push(r.clone());
            }
            blocks.push(Block {
                times: Vec::new(),
                values: vec![Vec::new(); n_units],
            });
            current_rep = rep;
        }
        let block = blocks.last_mut().expect("a block was just pushed");
        let t = parse_cell(&record, line, first_unit - 1)?;
        if block.times.last().is_some_and(|&prev| t <= prev) {
            return Err(Error::NonMonotoneTime { row: line });
        }
        block.times.push(t);
        for (k, series) in block.values.iter_mut().enumerate() {
            series.push(parse_cell(&record, line, first_unit + k)?);
        }
    }
    let Some(first) = blocks.first() else {
        return Err(Error::EmptyFile);
    };
    if let Some(b) = blocks.iter().find(|b| b.times.len() != first.times.len()) {
        return Err(Error::LengthMismatch {
            expected: first.times.len(),
            found: b.times.len(),
        });
    }
    let grid = match target {
        Some(g) => g,
        None => {
            let t = &first.times;
            let r = t.len();
            if r < 2 {
                return Err(Error::InvalidParameter("a curve file needs at least two time points".into()));
            }
            let spacing = (t[r - 1] - t[0]) / (r - 1) as f64;
            Grid::new(t[0] - spacing, t[r - 1], r)?
        }
    };
    let points = grid.points();
    let r = grid.len();
    let mut values = Vec::with_capacity(blocks.len() * n_units * r);
    let mut interpolated = false;
    for block in &blocks {
        let on_grid = block.times.len() == r
            && block
                .times
                .iter()
                .zip(&points)
                .all(|(a, b)| (a - b).abs() <= GRID_MATCH_TOL * grid.spacing());
        for series in &block.values {
            if on_grid {
                values.extend_from_slice(series);
            } else {
                interpolated = true;
                values.extend(points.iter().map(|&t| interpolate(&block.times, series, t)));
            }
        }
    }
    Ok(LoadedCurves {
        curves: CurveSet::new(grid, blocks.len(), n_units, values)?,
        units,
        interpolated,
    })
}

/// Piecewise-linear interpolation through `(xs, ys)`, constant beyond the ends.
pub fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let last = xs.len() - 1;
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[last] {
        return ys[last];
    }
    let hi = xs.partition_point(|&x| x < t);
    if xs[hi] == t {
        return ys[hi];
    }
    let lo = hi - 1;
    let w = (t - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + w * (ys[hi] - ys[lo])
}

/// One row of a metadata file.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMeta {
    pub unit: String,
    pub group: String,
    pub covariate: f64,
}

pub fn load_meta(path: &Path) -> Result<Vec<UnitMeta>> {
    let file = File::open(path).map_err(|e| Error::Io(e).context(format!("opening {}", path.display())))?;
    parse_meta(file)
}

/// Parses `unit,group,covariate` rows (header required, columns by name).
pub fn parse_meta<R: Read>(reader: R) -> Result<Vec<UnitMeta>> {
    let mut rdr = ReaderBuilder::new().trim(Trim::All).comment(Some(b'#')).from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| Error::Parse {
            row: 1,
            column: 0,
            message: format!("metadata header lacks a '{name}' column"),
        })
    };
    let (cu, cg, cc) = (find("unit")?, find("group")?, find("covariate")?);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        out.push(UnitMeta {
            unit: record.get(cu).unwrap_or("").to_string(),
            group: record.get(cg).unwrap_or("").to_string(),
            covariate: parse_cell(&record, line, cc)?,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

/// Group layout for `units` (curve-file order). Groups are numbered in order
/// of first appearance in `meta`; their labels are returned alongside.
pub fn layout_from_meta(units: &[String], meta: &[UnitMeta]) -> Result<(GroupLayout, Vec<String>)> {
    let mut groups: Vec<String> = Vec::new();
    for m in meta {
        if !groups.contains(&m.group) {
            groups.push(m.group.clone());
        }
    }
    let by_unit: HashMap<&str, &UnitMeta> = meta.iter().map(|m| (m.unit.as_str(), m)).collect();
    if by_unit.len() != meta.len() {
        return Err(Error::DimensionMismatch("metadata lists a unit more than once".into()));
    }
    let mut group_of = Vec::with_capacity(units.len());
    let mut covariate = Vec::with_capacity(units.len());
    for u in units {
        let m = by_unit
            .get(u.as_str())
            .ok_or_else(|| Error::DimensionMismatch(format!("unit '{u}' has no metadata row")))?;
        group_of.push(groups.iter().position(|g| *g == m.group).expect("group was collected"));
        covariate.push(m.covariate);
    }
    Ok((GroupLayout::new(groups.len(), group_of, covariate)?, groups))
}

/// Provenance lines written above an output table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputHeader {
    pub entries: Vec<(String, String)>,
}

impl OutputHeader {
    pub fn new(command: &str) -> Self {
        let mut h = OutputHeader::default();
        h.push("fdtest", env!("CARGO_PKG_VERSION"));
        h.push("command", command);
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// A parsed output table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: OutputHeader,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column `name` parsed as numbers.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::DimensionMismatch(format!("table has no column '{name}'")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row[c].parse().map_err(|_| Error::Parse {
                    row: i + 1,
                    column: c + 1,
                    message: format!("'{}' is not a number", row[c]),
                })
            })
            .collect()
    }
}

/// Writes `# key: value` lines, the column header and the rows.
pub fn write_table<W: Write>(out: W, header: &OutputHeader, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = BufWriter::new(out);
    for (k, v) in &header.entries {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(columns)?;
    for row in rows {
        wtr.write_record(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn write_table_to(path: Option<&Path>, header: &OutputHeader, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::Io(e).context(format!("creating {}", p.display())))?;
            write_table(file, header, columns, rows)
        }
        None => write_table(std::io::stdout().lock(), header, columns, rows),
    }
}

/// Reads a table produced by [`write_table`].
pub fn read_table<R: Read>(mut reader: R) -> Result<Table> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut header = OutputHeader::default();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line[1..].trim_start().split_once(": ") {
            header.push(k, v);
        }
    }
    let mut rdr = ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let columns = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, columns, rows })
}

pub fn read_table_file(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::Io(e).context(format!("opening {}", path.display())))?;
    read_table(file)
}
