//! Table model, CSV ingestion and column-kind inference.
//!
//! Cells are kept as text. Numeric or temporal interpretation only happens
//! when features are extracted, so every operator sees the exact cell text it
//! was given and evaluation can compare cells byte-for-byte.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Fraction of non-empty cells that must parse as a kind for a column to get it.
pub const MAJORITY_KIND_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {message}")]
    Csv { path: String, message: String },
    #[error("no header or no data rows in {0}")]
    EmptyTable(String),
    #[error("table {table} has no column named {column:?}")]
    UnknownColumn { table: String, column: String },
    #[error("table {table}: row {row} has {found} cells, expected {expected}")]
    Ragged {
        table: String,
        row: usize,
        found: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Integer,
    Float,
    Datetime,
    String,
    Empty,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Integer | ColumnKind::Float)
    }

    /// Kinds that can never hold equal values (numeric vs temporal).
    pub fn incompatible_with(self, other: ColumnKind) -> bool {
        (self.is_numeric() && other == ColumnKind::Datetime)
            || (self == ColumnKind::Datetime && other.is_numeric())
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnKind::Integer => "integer",
            ColumnKind::Float => "float",
            ColumnKind::Datetime => "datetime",
            ColumnKind::String => "string",
            ColumnKind::Empty => "empty",
        };
        f.write_str(s)
    }
}

/// A named, rectangular grid of string cells.
///
/// Tables are immutable once built; every operator produces a new one.
#[derive(Clone)]
pub struct Table {
    name: String,
    column_names: Vec<String>,
    rows: Vec<Vec<String>>,
    column_kinds: Vec<ColumnKind>,
    fingerprint: Arc<OnceLock<String>>,
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.column_names == other.column_names
            && self.rows == other.rows
            && self.column_kinds == other.column_kinds
    }
}

impl Eq for Table {}

impl fmt::Debug for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Table")
            .field("name", &self.name)
            .field("column_names", &self.column_names)
            .field("rows", &self.rows.len())
            .finish()
    }
}

impl Table {
    /// Builds a table from headers and rows. Rows must already be rectangular;
    /// duplicate headers are renamed `<name>_2`, `<name>_3`, ... in order.
    pub fn new(
        name: impl Into<String>,
        column_names: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Result<Self, TableError> {
        let name = name.into();
        let width = column_names.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(TableError::Ragged {
                table: name,
                row: i,
                found: row.len(),
                expected: width,
            });
        }
        let column_names = disambiguate_headers(column_names);
        let mut table = Table {
            name,
            column_names,
            rows,
            column_kinds: Vec::new(),
            fingerprint: Arc::new(OnceLock::new()),
        };
        table.column_kinds = (0..width).map(|c| infer_kind(table.column_iter(c))).collect();
        Ok(table)
    }

    /// Convenience constructor for literal tables in tests and fixtures.
    pub fn from_rows<S: AsRef<str>>(name: &str, headers: &[S], rows: &[&[S]]) -> Self {
        let headers = headers.iter().map(|h| h.as_ref().to_string()).collect();
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|c| c.as_ref().to_string()).collect())
            .collect();
        Table::new(name, headers, rows).expect("literal table must be rectangular")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn column_kinds(&self) -> &[ColumnKind] {
        &self.column_kinds
    }

    pub fn num_columns(&self) -> usize {
        self.column_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == column)
    }

    pub fn require_column(&self, column: &str) -> Result<usize, TableError> {
        self.column_index(column).ok_or_else(|| TableError::UnknownColumn {
            table: self.name.clone(),
            column: column.to_string(),
        })
    }

    pub fn column_iter(&self, index: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[index].as_str())
    }

    pub fn column_values(&self, index: usize) -> Vec<&str> {
        self.column_iter(index).collect()
    }

    pub fn cell(&self, row: usize, column: usize) -> &str {
        &self.rows[row][column]
    }

    pub fn with_name(&self, name: impl Into<String>) -> Table {
        Table {
            name: name.into(),
            column_names: self.column_names.clone(),
            rows: self.rows.clone(),
            column_kinds: self.column_kinds.clone(),
            fingerprint: Arc::new(OnceLock::new()),
        }
    }

    /// Stable content hash (hex, 16 chars) over name, headers and cells.
    ///
    /// Used as the key for scorer overrides, so it must not change between
    /// runs or builds.
    pub fn fingerprint(&self) -> &str {
        self.fingerprint.get_or_init(|| {
            let mut hasher = Sha256::new();
            hasher.update(self.name.as_bytes());
            hasher.update([0xff]);
            for h in &self.column_names {
                hasher.update(h.as_bytes());
                hasher.update([0x1f]);
            }
            hasher.update([0xfe]);
            for row in &self.rows {
                for cell in row {
                    hasher.update(cell.as_bytes());
                    hasher.update([0x1f]);
                }
                hasher.update([0x1e]);
            }
            hex::encode(&hasher.finalize()[..8])
        })
    }

    /// Serializes to RFC-4180 CSV with a header row.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        writer
            .write_record(&self.column_names)
            .expect("writing to memory cannot fail");
        for row in &self.rows {
            writer.write_record(row).expect("writing to memory cannot fail");
        }
        String::from_utf8(writer.into_inner().expect("flush to memory"))
            .expect("cells are valid UTF-8")
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), TableError> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Counts of repairs made while ingesting a CSV file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub padded_rows: usize,
    pub truncated_rows: usize,
}

/// Loads a CSV file with a header row. The table name is the file stem.
pub fn load_csv(path: &Path) -> Result<Table, TableError> {
    load_csv_with_report(path).map(|(t, _)| t)
}

pub fn load_csv_with_report(path: &Path) -> Result<(Table, IngestReport), TableError> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| TableError::Io {
        path: display.clone(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    let (table, report) = read_csv(file, &name, &display)?;
    if report.truncated_rows > 0 {
        log::warn!(
            "{}: truncated {} row(s) longer than the header",
            display,
            report.truncated_rows
        );
    }
    Ok((table, report))
}

/// Parses CSV text from any reader. `origin` is only used in error messages.
pub fn read_csv<R: Read>(
    reader: R,
    name: &str,
    origin: &str,
) -> Result<(Table, IngestReport), TableError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let csv_err = |e: csv::Error| TableError::Csv {
        path: origin.to_string(),
        message: e.to_string(),
    };
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if headers.is_empty() {
        return Err(TableError::EmptyTable(origin.to_string()));
    }
    let width = headers.len();
    let mut report = IngestReport::default();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let mut row: Vec<String> = record.iter().map(String::from).collect();
        if row.len() < width {
            report.padded_rows += 1;
            row.resize(width, String::new());
        } else if row.len() > width {
            report.truncated_rows += 1;
            row.truncate(width);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(TableError::EmptyTable(origin.to_string()));
    }
    Ok((Table::new(name, headers, rows)?, report))
}

fn disambiguate_headers(headers: Vec<String>) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut taken: BTreeSet<String> = headers.iter().cloned().collect();
    let mut out = Vec::with_capacity(headers.len());
    for h in headers {
        let count = seen.entry(h.clone()).or_insert(0);
        *count += 1;
        if *count == 1 {
            out.push(h);
            continue;
        }
        let mut n = *count;
        let mut candidate = format!("{h}_{n}");
        while taken.contains(&candidate) {
            n += 1;
            candidate = format!("{h}_{n}");
        }
        taken.insert(candidate.clone());
        out.push(candidate);
    }
    out
}

/// Returns `base` if it is not already used, otherwise `base_2`, `base_3`, ...
pub fn unique_name(base: &str, existing: &[String]) -> String {
    if !existing.iter().any(|e| e == base) {
        return base.to_string();
    }
    (2..)
        .map(|n| format!("{base}_{n}"))
        .find(|c| !existing.iter().any(|e| e == c))
        .expect("unbounded search")
}

/// Re-derives column kinds from cell text. Idempotent.
pub fn infer_column_kinds(table: &Table) -> Table {
    let mut out = table.clone();
    out.column_kinds = (0..table.num_columns())
        .map(|c| infer_kind(table.column_iter(c)))
        .collect();
    out
}

pub fn parses_as_integer(cell: &str) -> bool {
    let s = cell.trim();
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

pub fn parses_as_float(cell: &str) -> bool {
    let s = cell.trim();
    // Rust accepts "inf"/"nan"; spreadsheet data does not mean those as numbers.
    if s.is_empty() || s.bytes().any(|b| b.is_ascii_alphabetic() && b != b'e' && b != b'E') {
        return false;
    }
    s.parse::<f64>().map(|v| v.is_finite()).unwrap_or(false)
}

const DATE_FORMATS: &[&str] = &["%Y-%m-%d", "%Y/%m/%d", "%d/%m/%Y", "%m/%d/%Y", "%d.%m.%Y", "%b %d %Y", "%d %b %Y"];
const DATETIME_FORMATS: &[&str] = &["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%m/%d/%Y %H:%M"];

pub fn parses_as_datetime(cell: &str) -> bool {
    let s = cell.trim();
    if s.len() < 5 {
        return false;
    }
    DATE_FORMATS.iter().any(|f| NaiveDate::parse_from_str(s, f).is_ok())
        || DATETIME_FORMATS
            .iter()
            .any(|f| NaiveDateTime::parse_from_str(s, f).is_ok())
        || NaiveTime::parse_from_str(s, "%H:%M:%S").is_ok()
}

fn infer_kind<'a>(cells: impl Iterator<Item = &'a str>) -> ColumnKind {
    let (mut total, mut ints, mut floats, mut dates) = (0usize, 0usize, 0usize, 0usize);
    for cell in cells {
        if cell.trim().is_empty() {
            continue;
        }
        total += 1;
        if parses_as_integer(cell) {
            ints += 1;
            floats += 1;
        } else if parses_as_float(cell) {
            floats += 1;
        } else if parses_as_datetime(cell) {
            dates += 1;
        }
    }
    if total == 0 {
        return ColumnKind::Empty;
    }
    let passes = |n: usize| n as f64 >= MAJORITY_KIND_THRESHOLD * total as f64;
    if passes(ints) {
        ColumnKind::Integer
    } else if passes(floats) {
        ColumnKind::Float
    } else if passes(dates) {
        ColumnKind::Datetime
    } else {
        ColumnKind::String
    }
}

/// Trim + case-fold. The single normalization used by every overlap feature.
pub fn normalize_cell(cell: &str) -> String {
    cell.trim().to_lowercase()
}

/// Distinct non-empty normalized values of a column.
pub fn value_domain(table: &Table, column: &str) -> Result<BTreeSet<String>, TableError> {
    let idx = table.require_column(column)?;
    Ok(domain_of(table, idx))
}

pub fn domain_of(table: &Table, index: usize) -> BTreeSet<String> {
    table
        .column_iter(index)
        .map(normalize_cell)
        .filter(|v| !v.is_empty())
        .collect()
}

pub fn header_set(table: &Table) -> BTreeSet<String> {
    table
        .column_names()
        .iter()
        .map(|h| normalize_cell(h))
        .filter(|h| !h.is_empty())
        .collect()
}

/// All input tables of one project with their header and domain sets cached.
#[derive(Debug, Clone)]
pub struct ProjectContext {
    tables: Vec<Arc<Table>>,
    headers: Vec<BTreeSet<String>>,
    domains: Vec<Vec<BTreeSet<String>>>,
}

impl ProjectContext {
    pub fn new(tables: Vec<Table>) -> Self {
        let tables: Vec<Arc<Table>> = tables.into_iter().map(Arc::new).collect();
        let headers = tables.iter().map(|t| header_set(t)).collect();
        let domains = tables
            .iter()
            .map(|t| (0..t.num_columns()).map(|c| domain_of(t, c)).collect())
            .collect();
        ProjectContext {
            tables,
            headers,
            domains,
        }
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn tables(&self) -> &[Arc<Table>] {
        &self.tables
    }

    pub fn table(&self, index: usize) -> &Arc<Table> {
        &self.tables[index]
    }

    pub fn headers(&self, index: usize) -> &BTreeSet<String> {
        &self.headers[index]
    }

    pub fn domains(&self, index: usize) -> &[BTreeSet<String>] {
        &self.domains[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name() == name)
    }

    /// Indices of every table except `index`.
    pub fn others(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.tables.len()).filter(move |&j| j != index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<(Table, IngestReport), TableError> {
        read_csv(text.as_bytes(), "t", "inline")
    }

    #[test]
    fn loads_date_dimension() {
        let (t, _) = csv("Year,IsLeap\n2010,No\n2011,No").unwrap();
        assert_eq!(t.column_names(), ["Year", "IsLeap"]);
        assert_eq!(t.num_rows(), 2);
        assert_eq!(t.column_kinds(), [ColumnKind::Integer, ColumnKind::String]);
    }

    #[test]
    fn header_only_is_empty_table() {
        let err = csv("a,b,c\n").unwrap_err();
        assert!(matches!(err, TableError::EmptyTable(_)));
        assert!(err.to_string().contains("no data rows"));
    }

    #[test]
    fn short_rows_padded_long_rows_truncated() {
        let (t, report) = csv("a,b,c\nx\n1,2,3,4\n").unwrap();
        assert_eq!(t.rows()[0], ["x", "", ""]);
        assert_eq!(t.rows()[1], ["1", "2", "3"]);
        assert_eq!(report, IngestReport { padded_rows: 1, truncated_rows: 1 });
    }

    #[test]
    fn whitespace_preserved() {
        let (t, _) = csv("a,b\n  x , y\n").unwrap();
        assert_eq!(t.rows()[0], ["  x ", " y"]);
    }

    #[test]
    fn duplicate_headers_get_suffixes() {
        let (t, _) = csv("a,a,b,a\n1,2,3,4\n").unwrap();
        assert_eq!(t.column_names(), ["a", "a_2", "b", "a_3"]);
        let (t, _) = csv("a,a_2,a\n1,2,3\n").unwrap();
        assert_eq!(t.column_names(), ["a", "a_2", "a_3"]);
    }

    #[test]
    fn kinds_follow_majority_rule() {
        let t = Table::from_rows(
            "k",
            &["year", "rate", "country", "blank", "when", "mostly"],
            &[
                &["2010", "1.38", "Poland", "", "2020-01-01", "1"],
                &["2011", "1.3", "Chile", "", "2020-01-02", "2"],
                &["2012", "1.3", "Morocco", "", "2020-01-03", "3"],
                &["2013", "", "Turkey", "", "2020-01-04", "x"],
            ],
        );
        assert_eq!(
            t.column_kinds(),
            [
                ColumnKind::Integer,
                ColumnKind::Float,
                ColumnKind::String,
                ColumnKind::Empty,
                ColumnKind::Datetime,
                // 3 of 4 = 75% < 90%
                ColumnKind::String,
            ]
        );
        assert_eq!(infer_column_kinds(&t), t);
        assert_eq!(infer_column_kinds(&infer_column_kinds(&t)), t);
    }

    #[test]
    fn nan_and_inf_are_not_floats() {
        assert!(!parses_as_float("inf"));
        assert!(!parses_as_float("NaN"));
        assert!(parses_as_float("1e3"));
        assert!(parses_as_float("-0.5"));
    }

    #[test]
    fn value_domain_normalizes() {
        let t = Table::from_rows(
            "c",
            &["Code", "Empty"],
            &[&["POL", ""], &["CHL", " "], &["chl ", ""], &["TUR", ""], &["MAR", ""]],
        );
        let d = value_domain(&t, "Code").unwrap();
        assert_eq!(d.into_iter().collect::<Vec<_>>(), ["chl", "mar", "pol", "tur"]);
        assert!(value_domain(&t, "Empty").unwrap().is_empty());
        assert!(matches!(
            value_domain(&t, "Nope"),
            Err(TableError::UnknownColumn { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_fixed_point() {
        let text = "a,b\n\"x,1\",\"say \"\"hi\"\"\"\n,2\n";
        let (t1, _) = csv(text).unwrap();
        let (t2, _) = csv(&t1.to_csv_string()).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.to_csv_string(), t2.to_csv_string());
    }

    #[test]
    fn fingerprint_is_content_sensitive() {
        let a = Table::from_rows("t", &["a"], &[&["1"]]);
        let b = Table::from_rows("t", &["a"], &[&["2"]]);
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}
