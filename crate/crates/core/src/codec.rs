//! Row <-> sentence encoding and fine-tuning corpus emission.
//!
//! A record encodes as one line of segments `<name> is <value>,` joined by a
//! single space, in permutation order:
//!
//! ```text
//! State is WV, Lat is 39.0, Long is -80.5,
//! ```
//!
//! Decoding is keyed by attribute name, so any attribute order decodes to
//! the same record.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::table::{check_value, parse_finite, Cell, Column, ColumnKind, Permutation, Record, Schema, Table};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSentence {
    pub text: String,
    pub row: Option<usize>,
    pub permutation: Permutation,
}

pub fn encode_record(record: &[Cell], schema: &Schema, k: &Permutation) -> Result<EncodedSentence> {
    if record.len() != schema.len() {
        return Err(Error::SchemaMismatch(format!(
            "record has {} cells, schema has {} columns",
            record.len(),
            schema.len()
        )));
    }
    k.check_len(schema.len())?;
    let mut text = String::new();
    for (j, &c) in k.order().iter().enumerate() {
        let name = &schema.column(c).name;
        let value = &record[c].lexical;
        check_value(name, value)?;
        if j > 0 {
            text.push(' ');
        }
        text.push_str(name);
        text.push_str(" is ");
        text.push_str(value);
        text.push(',');
    }
    Ok(EncodedSentence {
        text,
        row: None,
        permutation: k.clone(),
    })
}

/// Parses one sentence back into a record in schema order.
pub fn decode_sentence(text: &str, schema: &Schema) -> Result<Record> {
    let body = text.strip_suffix(',').ok_or(Error::MalformedSegment(1))?;
    let mut cells: Vec<Option<Cell>> = vec![None; schema.len()];
    for (i, segment) in body.split(", ").enumerate() {
        let (name, value) = segment
            .split_once(" is ")
            .filter(|(n, v)| !n.is_empty() && !v.is_empty())
            .ok_or(Error::MalformedSegment(i + 1))?;
        let c = schema
            .index_of(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        if cells[c].is_some() {
            return Err(Error::DuplicateAttribute(name.to_string()));
        }
        let cell = match schema.kind(c) {
            ColumnKind::Numeric => Cell {
                lexical: value.to_string(),
                numeric: Some(
                    parse_finite(value).ok_or_else(|| Error::NumericParseFailure(name.to_string()))?,
                ),
            },
            ColumnKind::Categorical => Cell::categorical(value),
        };
        cells[c] = Some(cell);
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(c, cell)| cell.ok_or_else(|| Error::MissingAttribute(schema.column(c).name.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    FixedOrder,
    RandomPerRow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusSpec {
    /// Every row uses the same permutation.
    FixedOrder(Permutation),
    /// Each row gets its own uniform permutation drawn from `(seed, row)`.
    RandomPerRow { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub mode: CorpusMode,
    pub permutation: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub n: usize,
    pub schema: Vec<Column>,
    pub schema_hash: String,
}

impl CorpusManifest {
    /// Checks that a table schema matches the one the corpus was built from.
    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        if self.schema_hash != schema.fingerprint() {
            return Err(Error::SchemaMismatch("corpus manifest schema differs".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub lines: Vec<String>,
    pub manifest: CorpusManifest,
}

impl Corpus {
    /// LF-terminated text, one sentence per line.
    pub fn text(&self) -> String {
        let mut s = String::with_capacity(self.lines.iter().map(|l| l.len() + 1).sum());
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s
    }
}

pub fn random_permutation(m: usize, seed: u64, row: u64) -> Permutation {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut stream_rng(seed, row));
    Permutation::new(order).expect("shuffle of identity")
}

pub fn emit_corpus(table: &Table, spec: &CorpusSpec) -> Result<Corpus> {
    let schema = table.schema();
    let m = schema.len();
    if let CorpusSpec::FixedOrder(k) = spec {
        k.check_len(m)?;
    }
    let lines = table
        .rows()
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let k = match spec {
                CorpusSpec::FixedOrder(k) => k.clone(),
                CorpusSpec::RandomPerRow { seed } => random_permutation(m, *seed, i as u64),
            };
            encode_record(row, schema, &k).map(|s| s.text)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mode, permutation, seed) = match spec {
        CorpusSpec::FixedOrder(k) => (
            CorpusMode::FixedOrder,
            Some(k.names(schema).into_iter().map(String::from).collect()),
            None,
        ),
        CorpusSpec::RandomPerRow { seed } => (CorpusMode::RandomPerRow, None, Some(*seed)),
    };
    Ok(Corpus {
        lines,
        manifest: CorpusManifest {
            mode,
            permutation,
            seed,
            n: table.n_rows(),
            schema: schema.columns().to_vec(),
            schema_hash: schema.fingerprint(),
        },
    })
}

/// Decodes every line; failures are returned alongside their 1-based line
/// number instead of aborting.
pub fn decode_lines(text: &str, schema: &Schema) -> (Vec<Record>, Vec<(usize, Error)>) {
    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match decode_sentence(line, schema) {
            Ok(r) => ok.push(r),
            Err(e) => rejected.push((i + 1, e)),
        }
    }
    (ok, rejected)
}

/// Counts of each distinct attribute-name order in a corpus.
pub fn order_histogram(lines: &[String]) -> HashMap<Vec<String>, usize> {
    let mut h = HashMap::new();
    for l in lines {
        let names: Vec<String> = l
            .trim_end_matches(',')
            .split(", ")
            .filter_map(|s| s.split_once(" is ").map(|(n, _)| n.to_string()))
            .collect();
        *h.entry(names).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::load_table_str;

    fn locations() -> Table {
        load_table_str("State,Lat,Long\nWV,39.0,-80.5\nVA,37.5,-78.1\n", None).unwrap()
    }

    #[test]
    fn encodes_in_permutation_order() {
        let t = locations();
        let k = Permutation::identity(3);
        let s = encode_record(&t.rows()[0], t.schema(), &k).unwrap();
        assert_eq!(s.text, "State is WV, Lat is 39.0, Long is -80.5,");
        let k = Permutation::new(vec![2, 0, 1]).unwrap();
        let s = encode_record(&t.rows()[0], t.schema(), &k).unwrap();
        assert_eq!(s.text, "Long is -80.5, State is WV, Lat is 39.0,");
    }

    #[test]
    fn single_column() {
        let t = load_table_str("Age\n30\n", None).unwrap();
        let s = encode_record(&t.rows()[0], t.schema(), &Permutation::identity(1)).unwrap();
        assert_eq!(s.text, "Age is 30,");
    }

    #[test]
    fn decode_is_name_keyed() {
        let t = locations();
        let r = decode_sentence("Long is -80.5, State is WV, Lat is 39.0,", t.schema()).unwrap();
        assert_eq!(r, t.rows()[0]);
    }

    #[test]
    fn decode_errors() {
        let t = locations();
        let s = t.schema();
        assert_eq!(
            decode_sentence("State is WV, State is VA, Lat is 1, Long is 2,", s).unwrap_err(),
            Error::DuplicateAttribute("State".into())
        );
        assert_eq!(
            decode_sentence("State WV, Lat is 1, Long is 2,", s).unwrap_err(),
            Error::MalformedSegment(1)
        );
        assert_eq!(
            decode_sentence("State is WV, Lat is 1, Long is 2", s).unwrap_err(),
            Error::MalformedSegment(1)
        );
        assert_eq!(
            decode_sentence("State is WV, Lat is 1, Elev is 2,", s).unwrap_err(),
            Error::UnknownColumn("Elev".into())
        );
        assert_eq!(
            decode_sentence("State is WV, Lat is 1,", s).unwrap_err(),
            Error::MissingAttribute("Long".into())
        );
        assert_eq!(
            decode_sentence("State is WV, Lat is north, Long is 2,", s).unwrap_err(),
            Error::NumericParseFailure("Lat".into())
        );
        assert!(decode_sentence("", s).is_err());
        assert!(decode_sentence(",", s).is_err());
    }

    #[test]
    fn encode_rejects_reserved_tokens() {
        let schema = Schema::new(vec![Column::new("a", ColumnKind::Categorical)]).unwrap();
        let rec = vec![Cell::categorical("x, y")];
        assert!(matches!(
            encode_record(&rec, &schema, &Permutation::identity(1)),
            Err(Error::ReservedTokenInValue { .. })
        ));
    }

    #[test]
    fn fixed_order_corpus() {
        let t = locations();
        let k = Permutation::new(vec![1, 2, 0]).unwrap();
        let c = emit_corpus(&t, &CorpusSpec::FixedOrder(k)).unwrap();
        assert_eq!(c.lines.len(), 2);
        assert!(c.lines.iter().all(|l| l.starts_with("Lat is ")));
        assert_eq!(c.manifest.n, 2);
        assert_eq!(c.manifest.permutation.as_deref().unwrap(), &["Lat", "Long", "State"]);
        assert!(c.text().ends_with(",\n"));
        c.manifest.check_schema(t.schema()).unwrap();
    }

    #[test]
    fn random_corpus_is_seeded() {
        let t = locations();
        let a = emit_corpus(&t, &CorpusSpec::RandomPerRow { seed: 7 }).unwrap();
        let b = emit_corpus(&t, &CorpusSpec::RandomPerRow { seed: 7 }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.manifest.seed, Some(7));
        assert_eq!(a.manifest.permutation, None);
    }

    #[test]
    fn decode_lines_collects_rejects() {
        let t = locations();
        let text = "State is WV, Lat is 39.0, Long is -80.5,\nnonsense\n";
        let (ok, bad) = decode_lines(text, t.schema());
        assert_eq!(ok.len(), 1);
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].0, 2);
    }
}
