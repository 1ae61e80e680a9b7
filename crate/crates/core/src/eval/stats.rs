//! Low-order fidelity statistics: single-column shapes and column-pair
//! trends.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::QuantileBins;
use crate::error::{Error, Result};
use crate::table::{ColumnKind, Table};

/// Mixed numeric/categorical pairs discretize the numeric side into this
/// many quantile bins.
pub const PAIR_BINS: usize = 10;

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn frequencies<K: std::hash::Hash + Eq + Clone>(xs: &[K]) -> HashMap<K, f64> {
    let mut h: HashMap<K, f64> = HashMap::new();
    for x in xs {
        *h.entry(x.clone()).or_insert(0.0) += 1.0;
    }
    let n = xs.len() as f64;
    for v in h.values_mut() {
        *v /= n;
    }
    h
}

/// Half the L1 distance between two empirical distributions.
pub fn total_variation<K: std::hash::Hash + Eq + Clone + Ord>(a: &[K], b: &[K]) -> f64 {
    let pa = frequencies(a);
    let pb = frequencies(b);
    let mut keys: Vec<&K> = pa.keys().chain(pb.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|k| (pa.get(k).copied().unwrap_or(0.0) - pb.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn check_pair(real: &Table, synth: &Table) -> Result<()> {
    if real.schema() != synth.schema() {
        return Err(Error::SchemaMismatch("real and synthetic schemas differ".into()));
    }
    if real.n_rows() == 0 || synth.n_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScore {
    pub column: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub score: f64,
    pub columns: Vec<ColumnScore>,
}

pub fn shape_report(real: &Table, synth: &Table) -> Result<ShapeReport> {
    check_pair(real, synth)?;
    let schema = real.schema();
    let columns: Vec<ColumnScore> = (0..schema.len())
        .into_par_iter()
        .map(|c| {
            let score = match schema.kind(c) {
                ColumnKind::Numeric => {
                    1.0 - ks_statistic(
                        &real.numeric_column(c).expect("numeric"),
                        &synth.numeric_column(c).expect("numeric"),
                    )
                }
                ColumnKind::Categorical => 1.0 - total_variation(&real.lexical_column(c), &synth.lexical_column(c)),
            };
            ColumnScore {
                column: schema.column(c).name.clone(),
                score,
            }
        })
        .collect();
    let score = columns.iter().map(|c| c.score).sum::<f64>() / columns.len() as f64;
    Ok(ShapeReport { score, columns })
}

pub fn shape_score(real: &Table, synth: &Table) -> Result<f64> {
    Ok(shape_report(real, synth)?.score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub columns: [String; 2],
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    /// Mean over scored pairs; 1 when every pair was skipped.
    pub score: f64,
    pub pairs: Vec<PairScore>,
    /// Numeric pairs with a zero-variance side, left out of the mean.
    pub skipped: Vec<[String; 2]>,
}

/// Per-row discrete labels for column `c`; numeric columns are binned with
/// edges fitted on both tables together so the result is symmetric.
fn labels(real: &Table, synth: &Table, c: usize) -> (Vec<String>, Vec<String>) {
    match real.schema().kind(c) {
        ColumnKind::Categorical => (
            real.lexical_column(c).into_iter().map(String::from).collect(),
            synth.lexical_column(c).into_iter().map(String::from).collect(),
        ),
        ColumnKind::Numeric => {
            let r = real.numeric_column(c).expect("numeric");
            let s = synth.numeric_column(c).expect("numeric");
            let pooled: Vec<f64> = r.iter().chain(&s).copied().collect();
            let bins = QuantileBins::fit(&pooled, PAIR_BINS);
            let lab = |v: &[f64]| v.iter().map(|&x| format!("b{}", bins.bin(x))).collect();
            (lab(&r), lab(&s))
        }
    }
}

pub fn pair_trends_report(real: &Table, synth: &Table) -> Result<PairReport> {
    check_pair(real, synth)?;
    let schema = real.schema();
    let m = schema.len();
    if m < 2 {
        return Err(Error::InvalidParameter("pair trends need at least two columns".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let scored: Vec<(usize, usize, Option<f64>)> = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let both_numeric = schema.kind(a) == ColumnKind::Numeric && schema.kind(b) == ColumnKind::Numeric;
            let score = if both_numeric {
                let rho = |t: &Table| pearson(&t.numeric_column(a).unwrap(), &t.numeric_column(b).unwrap());
                match (rho(real), rho(synth)) {
                    (Some(r), Some(s)) => Some(1.0 - (r - s).abs() / 2.0),
                    _ => None,
                }
            } else {
                let (ra, sa) = labels(real, synth, a);
                let (rb, sb) = labels(real, synth, b);
                let joint = |x: Vec<String>, y: Vec<String>| x.into_iter().zip(y).collect::<Vec<_>>();
                Some(1.0 - total_variation(&joint(ra, rb), &joint(sa, sb)))
            };
            (a, b, score)
        })
        .collect();
    let name = |c: usize| schema.column(c).name.clone();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (a, b, s) in scored {
        match s {
            Some(score) => out.push(PairScore {
                columns: [name(a), name(b)],
                score,
            }),
            None => skipped.push([name(a), name(b)]),
        }
    }
    let score = if out.is_empty() {
        1.0
    } else {
        out.iter().map(|p| p.score).sum::<f64>() / out.len() as f64
    };
    Ok(PairReport {
        score,
        pairs: out,
        skipped,
    })
}

pub fn pair_trends_score(real: &Table, synth: &Table) -> Result<f64> {
    Ok(pair_trends_report(real, synth)?.score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::load_table_str;

    fn table(header: &str, rows: &[String]) -> Table {
        load_table_str(&format!("{header}\n{}\n", rows.join("\n")), None).unwrap()
    }

    #[test]
    fn ks_examples() {
        let real: Vec<f64> = (0..100).map(|i| (i >= 50) as u8 as f64).collect();
        assert_eq!(ks_statistic(&real, &[0.0; 100]), 0.5);
        assert_eq!(ks_statistic(&real, &real), 0.0);
        assert_eq!(ks_statistic(&[0.0], &[1.0]), 1.0);
    }

    #[test]
    fn tvd_example() {
        assert_eq!(total_variation(&["A", "B"], &["A", "A"]), 0.5);
    }

    #[test]
    fn shape_score_examples() {
        let half: Vec<String> = (0..100).map(|i| if i < 50 { "A".into() } else { "B".into() }).collect();
        let all_a: Vec<String> = vec!["A".into(); 100];
        assert_eq!(shape_score(&table("c", &half), &table("c", &all_a)).unwrap(), 0.5);
        let nums: Vec<String> = (0..100).map(|i| ((i >= 50) as u8).to_string()).collect();
        let zeros: Vec<String> = vec!["0".into(); 100];
        assert_eq!(shape_score(&table("v", &nums), &table("v", &zeros)).unwrap(), 0.5);
        let t = table("v", &nums);
        assert_eq!(shape_score(&t, &t.clone()).unwrap(), 1.0);
    }

    #[test]
    fn correlated_vs_independent_is_half() {
        let real = table("x,y", &["1,1", "-1,-1", "1,1", "-1,-1"].map(String::from));
        let synth = table("x,y", &["1,1", "-1,1", "1,-1", "-1,-1"].map(String::from));
        assert_eq!(pair_trends_score(&real, &synth).unwrap(), 0.5);
    }

    #[test]
    fn coupled_categories_vs_independent_is_half() {
        let real = table("a,b", &["A,X", "B,Y", "A,X", "B,Y"].map(String::from));
        let synth = table("a,b", &["A,X", "A,Y", "B,X", "B,Y"].map(String::from));
        assert_eq!(pair_trends_score(&real, &synth).unwrap(), 0.5);
        assert_eq!(pair_trends_score(&real, &real).unwrap(), 1.0);
    }

    #[test]
    fn zero_variance_pair_is_skipped() {
        let real = table("x,y", &["1,1", "1,2", "1,3"].map(String::from));
        let r = pair_trends_report(&real, &real).unwrap();
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn errors() {
        let a = table("x", &["1".to_string()]);
        let b = table("y", &["1".to_string()]);
        assert!(matches!(shape_score(&a, &b), Err(Error::SchemaMismatch(_))));
        let empty = load_table_str("x\n", None).unwrap();
        assert_eq!(shape_score(&empty, &empty).unwrap_err(), Error::EmptyTable);
    }
}
