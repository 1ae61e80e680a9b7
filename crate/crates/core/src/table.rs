//! The shared tabular data model: schema, cells, tables and column
//! permutations, plus CSV ingestion with kind inference.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Substrings that collide with the `name is value,` row encoding.
pub const RESERVED_TOKENS: [&str; 2] = [", ", " is "];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered, uniquely named columns. Always holds at least one column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    columns: Vec<Column>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            columns: Vec<Column>,
        }
        let raw = Raw::deserialize(d)?;
        Schema::new(raw.columns).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_name(name: &str) -> Result<()> {
    let bad = RESERVED_TOKENS.iter().any(|t| name.contains(t))
        || name.ends_with(" is")
        || name.ends_with(',')
        || name.contains(['\n', '\r']);
    if bad {
        return Err(Error::ReservedTokenInName(name.to_string()));
    }
    Ok(())
}

pub(crate) fn check_value(column: &str, value: &str) -> Result<()> {
    if RESERVED_TOKENS.iter().any(|t| value.contains(t)) || value.contains(['\n', '\r']) {
        return Err(Error::ReservedTokenInValue {
            column: column.to_string(),
            value: value.to_string(),
        });
    }
    Ok(())
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut index = HashMap::with_capacity(columns.len());
        for (i, c) in columns.iter().enumerate() {
            if c.name.is_empty() {
                return Err(Error::EmptyColumnName(i + 1));
            }
            check_name(&c.name)?;
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::DuplicateColumnName(c.name.clone()));
            }
        }
        Ok(Self { columns, index })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn kind(&self, i: usize) -> ColumnKind {
        self.columns[i].kind
    }

    /// Hex SHA-256 over `name\tkind\n` lines; stable across runs and platforms.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            let kind = match c.kind {
                ColumnKind::Categorical => "categorical",
                ColumnKind::Numeric => "numeric",
            };
            h.update(c.name.as_bytes());
            h.update(b"\t");
            h.update(kind.as_bytes());
            h.update(b"\n");
        }
        format!("{:x}", h.finalize())
    }
}

/// One table cell. `lexical` is the verbatim source text; `numeric` is set
/// exactly when the owning column is numeric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lexical: String,
    pub numeric: Option<f64>,
}

impl Cell {
    pub fn categorical(s: impl Into<String>) -> Self {
        Self {
            lexical: s.into(),
            numeric: None,
        }
    }

    /// Parses `s` as a finite decimal, keeping its lexical form.
    pub fn numeric(s: impl Into<String>) -> Option<Self> {
        let lexical = s.into();
        let v = parse_finite(&lexical)?;
        Some(Self {
            lexical,
            numeric: Some(v),
        })
    }

    /// A numeric cell whose lexical form is the shortest text that parses
    /// back to exactly `v`.
    pub fn from_f64(v: f64) -> Self {
        debug_assert!(v.is_finite());
        Self {
            lexical: format!("{v}"),
            numeric: Some(v),
        }
    }
}

/// Hex SHA-256 of arbitrary bytes, used to identify input files.
pub fn content_hash(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub(crate) fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub type Record = Vec<Cell>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    schema: Schema,
    rows: Vec<Record>,
}

impl Table {
    /// Builds a table, checking arity, numeric content and reserved tokens.
    pub fn new(schema: Schema, rows: Vec<Record>) -> Result<Self> {
        let m = schema.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::RaggedRow(r + 1));
            }
            for (j, cell) in row.iter().enumerate() {
                let col = schema.column(j);
                if cell.lexical.is_empty() {
                    return Err(Error::MissingCell {
                        row: r + 1,
                        column: col.name.clone(),
                    });
                }
                match col.kind {
                    ColumnKind::Numeric => {
                        let ok = matches!(cell.numeric, Some(v) if v.is_finite());
                        if !ok {
                            return Err(Error::UnparseableNumeric {
                                column: col.name.clone(),
                                value: cell.lexical.clone(),
                            });
                        }
                    }
                    ColumnKind::Categorical => check_value(&col.name, &cell.lexical)?,
                }
            }
        }
        Ok(Self { schema, rows })
    }

    /// Builds a table from raw strings, typing each cell by its column kind.
    pub fn from_strings(schema: Schema, rows: Vec<Vec<String>>) -> Result<Self> {
        let mut typed = Vec::with_capacity(rows.len());
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::RaggedRow(r + 1));
            }
            let mut cells = Vec::with_capacity(row.len());
            for (j, s) in row.into_iter().enumerate() {
                cells.push(make_cell(&schema, j, s)?);
            }
            typed.push(cells);
        }
        Table::new(schema, typed)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.rows[row][col]
    }

    /// Numeric values of column `col`; `None` for categorical columns.
    pub fn numeric_column(&self, col: usize) -> Option<Vec<f64>> {
        if self.schema.kind(col) != ColumnKind::Numeric {
            return None;
        }
        Some(self.rows.iter().map(|r| r[col].numeric.unwrap()).collect())
    }

    pub fn lexical_column(&self, col: usize) -> Vec<&str> {
        self.rows.iter().map(|r| r[col].lexical.as_str()).collect()
    }

    /// A table with the same schema holding the selected rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Replaces the schema without revalidating; caller guarantees the rows
    /// still conform.
    pub(crate) fn with_schema_unchecked(schema: Schema, rows: Vec<Record>) -> Table {
        Table { schema, rows }
    }

    pub fn into_rows(self) -> Vec<Record> {
        self.rows
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        save_table(self, &mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table cells are UTF-8")
    }
}

fn make_cell(schema: &Schema, j: usize, s: String) -> Result<Cell> {
    let col = schema.column(j);
    match col.kind {
        ColumnKind::Numeric => {
            Cell::numeric(s.clone()).ok_or_else(|| Error::UnparseableNumeric {
                column: col.name.clone(),
                value: s,
            })
        }
        ColumnKind::Categorical => Ok(Cell::categorical(s)),
    }
}

/// Reads a header-bearing CSV stream. A column is numeric iff every cell
/// parses as a finite decimal; `overrides` are applied after inference.
pub fn load_table<R: Read>(
    source: R,
    overrides: Option<&HashMap<String, ColumnKind>>,
) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::EmptyInput),
        Some(h) => h?,
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    let m = names.len();
    let mut seen = HashSet::with_capacity(m);
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() {
            return Err(Error::EmptyColumnName(i + 1));
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::DuplicateColumnName(n.clone()));
        }
    }

    let mut raw: Vec<Vec<String>> = Vec::new();
    for (r, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != m {
            return Err(Error::RaggedRow(r + 1));
        }
        let row: Vec<String> = rec.iter().map(str::to_string).collect();
        if let Some(j) = row.iter().position(String::is_empty) {
            return Err(Error::MissingCell {
                row: r + 1,
                column: names[j].clone(),
            });
        }
        raw.push(row);
    }

    let mut kinds: Vec<ColumnKind> = (0..m)
        .map(|j| {
            if !raw.is_empty() && raw.iter().all(|row| parse_finite(&row[j]).is_some()) {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            }
        })
        .collect();
    if let Some(ov) = overrides {
        // Sorted so the reported error does not depend on hash order.
        let mut ov: Vec<_> = ov.iter().collect();
        ov.sort();
        for (name, kind) in ov {
            let j = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            kinds[j] = *kind;
        }
    }

    let schema = Schema::new(
        names
            .into_iter()
            .zip(kinds)
            .map(|(n, k)| Column::new(n, k))
            .collect(),
    )?;
    Table::from_strings(schema, raw)
}

pub fn load_table_str(s: &str, overrides: Option<&HashMap<String, ColumnKind>>) -> Result<Table> {
    load_table(s.as_bytes(), overrides)
}

pub fn load_table_path(
    path: impl AsRef<Path>,
    overrides: Option<&HashMap<String, ColumnKind>>,
) -> Result<Table> {
    let f = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    load_table(std::io::BufReader::new(f), overrides)
}

/// Writes the table as RFC-4180 CSV using the lexical cell forms.
pub fn save_table<W: Write>(table: &Table, sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(table.schema.names())?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.lexical.as_str()))?;
    }
    w.flush()?;
    Ok(())
}

/// A column ordering: position `j` of the output holds input column `order[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        let mut seen = vec![false; m];
        for &i in &order {
            if i >= m {
                return Err(Error::InvalidPermutation(format!(
                    "index {i} out of range for {m} columns"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPermutation(format!("index {i} repeated")));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            order: (0..m).collect(),
        }
    }

    pub fn from_names<S: AsRef<str>>(names: &[S], schema: &Schema) -> Result<Self> {
        let order = names
            .iter()
            .map(|n| schema.require(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let k = Self::new(order)?;
        k.check_len(schema.len())?;
        Ok(k)
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn check_len(&self, m: usize) -> Result<()> {
        if self.order.len() != m {
            return Err(Error::InvalidPermutation(format!(
                "length {} does not match {m} columns",
                self.order.len()
            )));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            order: self.positions(),
        }
    }

    /// `positions()[c]` is the output position of input column `c`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (j, &c) in self.order.iter().enumerate() {
            pos[c] = j;
        }
        pos
    }

    pub fn names<'a>(&self, schema: &'a Schema) -> Vec<&'a str> {
        self.order
            .iter()
            .map(|&c| schema.column(c).name.as_str())
            .collect()
    }
}

/// Reorders the schema and every row by `k`.
pub fn apply_permutation(table: &Table, k: &Permutation) -> Result<Table> {
    k.check_len(table.n_cols())?;
    let columns = k
        .order()
        .iter()
        .map(|&c| table.schema.column(c).clone())
        .collect();
    let schema = Schema::new(columns)?;
    let rows = table
        .rows
        .iter()
        .map(|row| k.order().iter().map(|&c| row[c].clone()).collect())
        .collect();
    Ok(Table::with_schema_unchecked(schema, rows))
}
