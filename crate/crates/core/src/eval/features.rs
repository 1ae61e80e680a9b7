//! Dense feature matrices: one-hot categoricals, z-scored numerics.

use std::collections::BTreeSet;

use crate::table::{ColumnKind, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone)]
enum Feature {
    OneHot { col: usize, vocab: Vec<String> },
    Scaled { col: usize, mean: f64, std: f64 },
}

#[derive(Debug, Clone)]
pub struct Encoder {
    features: Vec<Feature>,
    width: usize,
}

impl Encoder {
    /// Vocabularies come from `vocab_rows`, numeric statistics from
    /// `stat_rows`; `exclude` leaves one column (a target) out.
    pub fn fit(table: &Table, vocab_rows: &[usize], stat_rows: &[usize], exclude: Option<usize>) -> Self {
        let schema = table.schema();
        let mut features = Vec::new();
        let mut width = 0;
        for c in (0..schema.len()).filter(|&c| Some(c) != exclude) {
            match schema.kind(c) {
                ColumnKind::Categorical => {
                    let vocab: Vec<String> = vocab_rows
                        .iter()
                        .map(|&r| table.cell(r, c).lexical.as_str())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .map(String::from)
                        .collect();
                    width += vocab.len();
                    features.push(Feature::OneHot { col: c, vocab });
                }
                ColumnKind::Numeric => {
                    let vals: Vec<f64> = stat_rows.iter().map(|&r| table.cell(r, c).numeric.unwrap()).collect();
                    let n = vals.len().max(1) as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
                    width += 1;
                    features.push(Feature::Scaled { col: c, mean, std });
                }
            }
        }
        Self { features, width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Encodes the given rows; unseen categories encode as all zeros.
    pub fn transform(&self, table: &Table, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.width);
        for &r in rows {
            for f in &self.features {
                match f {
                    Feature::OneHot { col, vocab } => {
                        let hit = vocab.binary_search_by(|v| v.as_str().cmp(&table.cell(r, *col).lexical)).ok();
                        data.extend((0..vocab.len()).map(|i| (Some(i) == hit) as u8 as f64));
                    }
                    Feature::Scaled { col, mean, std } => {
                        data.push((table.cell(r, *col).numeric.unwrap() - mean) / std);
                    }
                }
            }
        }
        Matrix {
            rows: rows.len(),
            cols: self.width,
            data,
        }
    }
}
