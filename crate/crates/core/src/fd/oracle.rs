//! Exhaustive dependency enumeration used as a reference for discovery.

use crate::error::{Error, Result};
use crate::table::Table;

use super::{fd_holds, sort_fds, FunctionalDependency};

/// Every minimal single-rhs dependency with `|lhs| <= max_lhs` and g3 within
/// `error_threshold`, found by calling [`fd_holds`] on every subset and then
/// checking every proper subset for minimality.
pub fn enumerate_fds(
    table: &Table,
    max_lhs: usize,
    error_threshold: f64,
) -> Result<Vec<FunctionalDependency>> {
    let m = table.n_cols();
    if m > 20 {
        return Err(Error::TooManyColumns(m, 20));
    }
    if table.n_rows() < 2 {
        return Err(Error::DegenerateTable);
    }
    let mut out = Vec::new();
    for rhs in 0..m {
        let others: Vec<usize> = (0..m).filter(|&c| c != rhs).collect();
        let mut satisfied: Vec<(u32, f64)> = Vec::new();
        for mask in 0u32..(1 << others.len()) {
            if mask.count_ones() as usize > max_lhs {
                continue;
            }
            let lhs = members(mask, &others);
            let (_, g3) = fd_holds(table, &lhs, rhs)?;
            if g3 <= error_threshold {
                satisfied.push((mask, g3));
            }
        }
        for &(mask, g3) in &satisfied {
            let minimal = !satisfied
                .iter()
                .any(|&(other, _)| other != mask && other & mask == other);
            if minimal {
                out.push(FunctionalDependency {
                    lhs: members(mask, &others),
                    rhs: vec![rhs],
                    g3,
                });
            }
        }
    }
    sort_fds(&mut out);
    Ok(out)
}

fn members(mask: u32, cols: &[usize]) -> Vec<usize> {
    cols.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &c)| c)
        .collect()
}
