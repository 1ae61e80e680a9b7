//! Functional dependency discovery.
//!
//! Discovery walks the lattice of determinant sets level by level, refining
//! stripped partitions as it goes, and keeps only minimal dependencies whose
//! g3 error is within the threshold. [`oracle`] holds an exhaustive
//! enumerator built on [`fd_holds`] that shares no code with the lattice walk.

mod partition;
pub mod oracle;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::discretize;
use crate::error::{Error, Result};
use crate::table::{Schema, Table};

pub use partition::{stripped_partition, StrippedPartition};
use partition::ColumnCodes;

/// `lhs -> rhs` over column indices, with the observed g3 error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDependency {
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
    pub g3: f64,
}

impl FunctionalDependency {
    /// Sorts and dedups both sides, then checks they are disjoint and the
    /// right-hand side is non-empty.
    pub fn new(mut lhs: Vec<usize>, mut rhs: Vec<usize>, g3: f64) -> Result<Self> {
        lhs.sort_unstable();
        lhs.dedup();
        rhs.sort_unstable();
        rhs.dedup();
        if rhs.is_empty() {
            return Err(Error::InvalidParameter("dependency rhs is empty".into()));
        }
        if let Some(c) = rhs.iter().find(|c| lhs.contains(c)) {
            return Err(Error::OverlappingLhsRhs(format!("column {c} on both sides")));
        }
        if !(0.0..=1.0).contains(&g3) {
            return Err(Error::InvalidParameter(format!("g3 {g3} outside [0, 1]")));
        }
        Ok(Self { lhs, rhs, g3 })
    }

    pub fn exact(lhs: Vec<usize>, rhs: Vec<usize>) -> Result<Self> {
        Self::new(lhs, rhs, 0.0)
    }

    pub fn check_columns(&self, m: usize) -> Result<()> {
        match self.lhs.iter().chain(&self.rhs).find(|&&c| c >= m) {
            Some(&c) => Err(Error::InvalidColumn(c)),
            None => Ok(()),
        }
    }

    pub fn display(&self, schema: &Schema) -> String {
        let side = |s: &[usize]| {
            s.iter()
                .map(|&c| schema.column(c).name.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!("{{{}}} -> {{{}}}", side(&self.lhs), side(&self.rhs))
    }
}

/// Same arithmetic everywhere so oracle and lattice results compare exactly.
pub(crate) fn g3_value(removed: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        removed as f64 / n as f64
    }
}

/// Whether `lhs` determines `rhs_col`, and the fraction of rows that would
/// have to be removed for it to hold exactly.
pub fn fd_holds(table: &Table, lhs: &[usize], rhs_col: usize) -> Result<(bool, f64)> {
    let m = table.n_cols();
    if let Some(&c) = lhs.iter().chain(std::iter::once(&rhs_col)).find(|&&c| c >= m) {
        return Err(Error::InvalidColumn(c));
    }
    if lhs.contains(&rhs_col) {
        return Err(Error::OverlappingLhsRhs(format!("column {rhs_col} on both sides")));
    }
    let mut groups: HashMap<Vec<&str>, HashMap<&str, usize>> = HashMap::new();
    for row in table.rows() {
        let key: Vec<&str> = lhs.iter().map(|&c| row[c].lexical.as_str()).collect();
        *groups
            .entry(key)
            .or_default()
            .entry(row[rhs_col].lexical.as_str())
            .or_default() += 1;
    }
    let mut removed = 0;
    for counts in groups.values() {
        let total: usize = counts.values().sum();
        let modal = counts.values().copied().max().unwrap_or(0);
        removed += total - modal;
    }
    Ok((removed == 0, g3_value(removed, table.n_rows())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryOptions {
    pub max_lhs: usize,
    pub error_threshold: f64,
    /// Quantile-bin numeric columns before discovery so continuous
    /// determinants can surface as approximate dependencies.
    pub numeric_bins: Option<usize>,
    /// Drop dependencies whose determinant is a key of the table.
    pub drop_keys: bool,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        Self {
            max_lhs: 3,
            error_threshold: 0.01,
            numeric_bins: Some(32),
            drop_keys: true,
        }
    }
}

/// Minimal single-rhs dependencies with `|lhs| <= max_lhs` and
/// `g3 <= error_threshold`, sorted by (rhs, |lhs|, lhs).
pub fn discover_fds(
    table: &Table,
    max_lhs: usize,
    error_threshold: f64,
) -> Result<Vec<FunctionalDependency>> {
    if max_lhs < 1 {
        return Err(Error::InvalidParameter("max_lhs must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&error_threshold) {
        return Err(Error::InvalidParameter(format!(
            "error threshold {error_threshold} outside [0, 1)"
        )));
    }
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::DegenerateTable);
    }
    let m = table.n_cols();
    let codes = ColumnCodes::new(table);
    let max_card = codes.cardinality.iter().copied().max().unwrap_or(0);
    let within = |removed: usize| g3_value(removed, n) <= error_threshold;

    // found[a] holds the minimal determinants already emitted for column a.
    let mut found: Vec<Vec<Vec<usize>>> = vec![Vec::new(); m];
    let mut out = Vec::new();

    let universe = StrippedPartition::universe(n);
    let mut scratch = vec![0usize; max_card];
    for a in 0..m {
        let removed = universe.removal_count(&codes.codes[a], &mut scratch);
        if within(removed) {
            found[a].push(Vec::new());
            out.push(FunctionalDependency {
                lhs: Vec::new(),
                rhs: vec![a],
                g3: g3_value(removed, n),
            });
        }
    }

    let mut level: Vec<(Vec<usize>, StrippedPartition)> = vec![(Vec::new(), universe)];
    for _size in 1..=max_lhs.min(m.saturating_sub(1)) {
        let candidates: Vec<(&[usize], &StrippedPartition, usize)> = level
            .iter()
            // Supersets of a key only yield non-minimal dependencies.
            .filter(|(x, p)| x.is_empty() || !p.is_key())
            .flat_map(|(x, p)| {
                let start = x.last().map_or(0, |&l| l + 1);
                (start..m).map(move |a| (x.as_slice(), p, a))
            })
            .collect();

        let found_ref = &found;
        let evaluated: Vec<(Vec<usize>, StrippedPartition, Vec<(usize, usize)>)> = candidates
            .into_par_iter()
            .map_init(
                || vec![0usize; max_card],
                |scratch, (parent, p, a)| {
                    let mut x = parent.to_vec();
                    x.push(a);
                    let px = p.refine(&codes.codes[a], codes.cardinality[a]);
                    let mut hits = Vec::new();
                    for rhs in 0..m {
                        if x.contains(&rhs) || found_ref[rhs].iter().any(|f| is_subset(f, &x)) {
                            continue;
                        }
                        let removed = px.removal_count(&codes.codes[rhs], scratch);
                        if within(removed) {
                            hits.push((rhs, removed));
                        }
                    }
                    (x, px, hits)
                },
            )
            .collect();

        let mut next = Vec::with_capacity(evaluated.len());
        for (x, px, hits) in evaluated {
            for (rhs, removed) in hits {
                out.push(FunctionalDependency {
                    lhs: x.clone(),
                    rhs: vec![rhs],
                    g3: g3_value(removed, n),
                });
                found[rhs].push(x.clone());
            }
            next.push((x, px));
        }
        level = next;
    }

    sort_fds(&mut out);
    Ok(out)
}

/// Canonical output order: (rhs, |lhs|, lhs).
pub fn sort_fds(fds: &mut [FunctionalDependency]) {
    fds.sort_by(|a, b| {
        a.rhs
            .cmp(&b.rhs)
            .then(a.lhs.len().cmp(&b.lhs.len()))
            .then(a.lhs.cmp(&b.lhs))
    });
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    // Both sorted ascending.
    let mut it = big.iter();
    small.iter().all(|s| it.by_ref().any(|b| b == s))
}

/// Discovery with the preprocessing and post-filtering options applied.
pub fn discover_with(table: &Table, opts: &DiscoveryOptions) -> Result<Vec<FunctionalDependency>> {
    let binned;
    let work = match opts.numeric_bins {
        Some(b) if b >= 2 => {
            binned = discretize(table, b);
            &binned
        }
        _ => table,
    };
    let mut fds = discover_fds(work, opts.max_lhs, opts.error_threshold)?;
    if opts.drop_keys {
        fds = drop_key_fds(work, fds)?;
    }
    Ok(fds)
}

/// Removes dependencies whose non-empty determinant is a key of `table`.
pub fn drop_key_fds(
    table: &Table,
    fds: Vec<FunctionalDependency>,
) -> Result<Vec<FunctionalDependency>> {
    let mut cache: HashMap<Vec<usize>, bool> = HashMap::new();
    let mut kept = Vec::with_capacity(fds.len());
    for fd in fds {
        if fd.lhs.is_empty() {
            kept.push(fd);
            continue;
        }
        let is_key = match cache.get(&fd.lhs) {
            Some(&k) => k,
            None => {
                let k = stripped_partition(table, &fd.lhs)?.is_key();
                cache.insert(fd.lhs.clone(), k);
                k
            }
        };
        if !is_key {
            kept.push(fd);
        }
    }
    Ok(kept)
}

#[derive(Serialize, Deserialize)]
struct FdLine {
    lhs: Vec<String>,
    rhs: Vec<String>,
    g3: f64,
}

/// One JSON object per line: `{"lhs":[..],"rhs":[..],"g3":..}`.
pub fn fds_to_jsonl(fds: &[FunctionalDependency], schema: &Schema) -> String {
    let names = |s: &[usize]| s.iter().map(|&c| schema.column(c).name.clone()).collect();
    let mut out = String::new();
    for fd in fds {
        let line = FdLine {
            lhs: names(&fd.lhs),
            rhs: names(&fd.rhs),
            g3: fd.g3,
        };
        out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn fds_from_jsonl(text: &str, schema: &Schema) -> Result<Vec<FunctionalDependency>> {
    let mut fds = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let raw: FdLine = serde_json::from_str(line)?;
        let idx = |names: &[String]| {
            names
                .iter()
                .map(|n| schema.require(n))
                .collect::<Result<Vec<_>>>()
        };
        fds.push(FunctionalDependency::new(idx(&raw.lhs)?, idx(&raw.rhs)?, raw.g3)?);
    }
    Ok(fds)
}
