//! Quantile discretization of numeric columns.

use serde::{Deserialize, Serialize};

use crate::table::{Cell, Column, ColumnKind, Schema, Table};

/// Upper-open quantile bins over training values.
///
/// Bin 0 is `(-inf, edges[0])`, bin `i` is `[edges[i-1], edges[i])` and the
/// last bin is `[edges[last], +inf)`. Every edge is a training value strictly
/// greater than the training minimum, so each bin holds at least one
/// training value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBins {
    pub edges: Vec<f64>,
}

impl QuantileBins {
    /// At most `bins` bins; fewer when values repeat.
    pub fn fit(values: &[f64], bins: usize) -> Self {
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut edges: Vec<f64> = Vec::new();
        if n == 0 || bins < 2 {
            return Self { edges };
        }
        let min = sorted[0];
        for i in 1..bins {
            let e = sorted[(i * n) / bins];
            if e > min && edges.last().is_none_or(|&last| e > last) {
                edges.push(e);
            }
        }
        Self { edges }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin(&self, v: f64) -> usize {
        self.edges.partition_point(|&e| e <= v)
    }
}

/// Replaces every numeric column with a categorical column of bin labels.
pub fn discretize(table: &Table, bins: usize) -> Table {
    let schema = table.schema();
    let binners: Vec<Option<QuantileBins>> = (0..schema.len())
        .map(|j| table.numeric_column(j).map(|v| QuantileBins::fit(&v, bins)))
        .collect();
    let columns = schema
        .columns()
        .iter()
        .map(|c| Column::new(c.name.clone(), ColumnKind::Categorical))
        .collect();
    let rows = table
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(&binners)
                .map(|(cell, b)| match b {
                    Some(b) => Cell::categorical(format!("b{}", b.bin(cell.numeric.unwrap()))),
                    None => cell.clone(),
                })
                .collect()
        })
        .collect();
    let schema = Schema::new(columns).expect("names unchanged");
    Table::with_schema_unchecked(schema, rows)
}
