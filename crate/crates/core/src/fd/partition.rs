//! Stripped partitions: equivalence classes of rows agreeing on a column
//! set, with singleton classes dropped.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StrippedPartition {
    /// Row indices per class, ascending within a class; classes ordered by
    /// their smallest row.
    classes: Vec<Vec<usize>>,
}

impl StrippedPartition {
    pub(crate) fn from_classes(mut classes: Vec<Vec<usize>>) -> Self {
        classes.retain(|c| c.len() >= 2);
        for c in &mut classes {
            c.sort_unstable();
        }
        classes.sort_unstable_by_key(|c| c[0]);
        Self { classes }
    }

    /// The partition of the empty column set: every row in one class.
    pub fn universe(n: usize) -> Self {
        Self::from_classes(vec![(0..n).collect()])
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Number of rows covered by non-singleton classes.
    pub fn stripped_size(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    /// True when no two rows agree, i.e. the column set is a key.
    pub fn is_key(&self) -> bool {
        self.classes.is_empty()
    }

    /// Refines `self` by a column given as dense value codes.
    pub(crate) fn refine(&self, codes: &[u32], n_codes: usize) -> Self {
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_codes];
        let mut touched: Vec<u32> = Vec::new();
        let mut out = Vec::new();
        for class in &self.classes {
            for &r in class {
                let c = codes[r];
                if buckets[c as usize].is_empty() {
                    touched.push(c);
                }
                buckets[c as usize].push(r);
            }
            for &c in &touched {
                let b = std::mem::take(&mut buckets[c as usize]);
                if b.len() >= 2 {
                    out.push(b);
                }
            }
            touched.clear();
        }
        Self::from_classes(out)
    }

    /// Rows to delete so that `codes` is constant within every class.
    pub(crate) fn removal_count(&self, codes: &[u32], scratch: &mut [usize]) -> usize {
        let mut removed = 0;
        for class in &self.classes {
            let mut best = 0;
            for &r in class {
                let slot = &mut scratch[codes[r] as usize];
                *slot += 1;
                best = best.max(*slot);
            }
            for &r in class {
                scratch[codes[r] as usize] = 0;
            }
            removed += class.len() - best;
        }
        removed
    }
}

/// Dense per-column value codes keyed by lexical form.
pub(crate) struct ColumnCodes {
    pub codes: Vec<Vec<u32>>,
    pub cardinality: Vec<usize>,
}

impl ColumnCodes {
    pub fn new(table: &Table) -> Self {
        let m = table.n_cols();
        let mut codes = Vec::with_capacity(m);
        let mut cardinality = Vec::with_capacity(m);
        for j in 0..m {
            let mut dict: HashMap<&str, u32> = HashMap::new();
            let col: Vec<u32> = table
                .rows()
                .iter()
                .map(|row| {
                    let next = dict.len() as u32;
                    *dict.entry(row[j].lexical.as_str()).or_insert(next)
                })
                .collect();
            cardinality.push(dict.len());
            codes.push(col);
        }
        Self { codes, cardinality }
    }
}

/// Groups rows by their projection on `cols`, dropping singletons.
pub fn stripped_partition(table: &Table, cols: &[usize]) -> Result<StrippedPartition> {
    if cols.is_empty() {
        return Err(Error::InvalidParameter("column set must be non-empty".into()));
    }
    if let Some(&bad) = cols.iter().find(|&&c| c >= table.n_cols()) {
        return Err(Error::InvalidColumn(bad));
    }
    let codes = ColumnCodes::new(table);
    let mut p = StrippedPartition::universe(table.n_rows());
    for &c in cols {
        p = p.refine(&codes.codes[c], codes.cardinality[c]);
    }
    Ok(p)
}
