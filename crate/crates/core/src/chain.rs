//! Finite-context autoregressive table generator.
//!
//! Columns are visited in permutation order. The first column is drawn from
//! its empirical marginal; every later column is drawn from the count table
//! conditioned on the values of up to `context` immediately preceding
//! columns, backing off to shorter contexts when the observed context is
//! rarer than `min_count`. Every conditional is Laplace-smoothed with
//! `alpha`. Numeric columns are modelled through quantile bins and
//! materialized by drawing a training value from the chosen bin.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::QuantileBins;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::table::{Cell, ColumnKind, Permutation, Record, Schema, Table};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Number of preceding columns a conditional may look at.
    pub context: usize,
    pub bins: usize,
    pub alpha: f64,
    pub min_count: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            context: 1,
            bins: 16,
            alpha: 1.0,
            min_count: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ColumnCoder {
    Categorical { vocab: Vec<String> },
    Numeric { bins: QuantileBins, pools: Vec<Vec<Cell>> },
}

impl ColumnCoder {
    fn vocab_size(&self) -> usize {
        match self {
            ColumnCoder::Categorical { vocab } => vocab.len(),
            ColumnCoder::Numeric { bins, .. } => bins.n_bins(),
        }
    }
}

/// Count tables for one context length, sorted by context for lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
struct ContextTable {
    contexts: Vec<Vec<u32>>,
    counts: Vec<Vec<u64>>,
}

impl ContextTable {
    fn get(&self, ctx: &[u32]) -> Option<&[u64]> {
        self.contexts
            .binary_search_by(|c| c.as_slice().cmp(ctx))
            .ok()
            .map(|i| self.counts[i].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PositionModel {
    column: usize,
    marginal: Vec<u64>,
    /// `levels[l - 1]` conditions on the `l` preceding columns.
    levels: Vec<ContextTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Fitted {
    n_train: usize,
    coders: Vec<ColumnCoder>,
    positions: Vec<PositionModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    version: u32,
    schema: Schema,
    order: Vec<usize>,
    config: ChainConfig,
    fitted: Option<Fitted>,
}

/// Which conditional a draw used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Marginal,
    Context(usize),
}

impl ChainModel {
    /// An unfitted model; `fit` fills in the tables.
    pub fn new(schema: Schema, k: &Permutation, config: ChainConfig) -> Result<Self> {
        k.check_len(schema.len())?;
        if config.context >= schema.len() {
            return Err(Error::InvalidParameter(format!(
                "context {} must be below the column count {}",
                config.context,
                schema.len()
            )));
        }
        if config.bins < 2 {
            return Err(Error::InvalidParameter("bins must be at least 2".into()));
        }
        if !(config.alpha > 0.0 && config.alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be positive".into()));
        }
        Ok(Self {
            version: MODEL_VERSION,
            schema,
            order: k.order().to_vec(),
            config,
            fitted: None,
        })
    }

    pub fn permutation(&self) -> Permutation {
        Permutation::new(self.order.clone()).expect("validated at construction")
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted.is_some()
    }

    fn state(&self) -> Result<&Fitted> {
        self.fitted.as_ref().ok_or(Error::NotFitted)
    }

    pub fn fit(&mut self, table: &Table) -> Result<()> {
        if table.schema() != &self.schema {
            return Err(Error::SchemaMismatch("training table schema differs from model".into()));
        }
        let n = table.n_rows();
        if n == 0 {
            return Err(Error::InsufficientData("cannot fit on an empty table".into()));
        }
        let m = self.schema.len();
        let mut coders = Vec::with_capacity(m);
        let mut tokens: Vec<Vec<u32>> = Vec::with_capacity(m);
        for c in 0..m {
            let (coder, col_tokens) = match self.schema.kind(c) {
                ColumnKind::Categorical => {
                    let vocab: Vec<String> = table
                        .lexical_column(c)
                        .into_iter()
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .map(String::from)
                        .collect();
                    let index: HashMap<&str, u32> = vocab
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.as_str(), i as u32))
                        .collect();
                    let toks = table.lexical_column(c).iter().map(|v| index[v]).collect();
                    (ColumnCoder::Categorical { vocab: vocab.clone() }, toks)
                }
                ColumnKind::Numeric => {
                    let values = table.numeric_column(c).expect("numeric column");
                    let bins = QuantileBins::fit(&values, self.config.bins);
                    let mut pools = vec![Vec::new(); bins.n_bins()];
                    let toks: Vec<u32> = values.iter().map(|&v| bins.bin(v) as u32).collect();
                    for (r, &t) in toks.iter().enumerate() {
                        pools[t as usize].push(table.cell(r, c).clone());
                    }
                    (ColumnCoder::Numeric { bins, pools }, toks)
                }
            };
            coders.push(coder);
            tokens.push(col_tokens);
        }

        let context = self.config.context;
        let order = &self.order;
        let positions: Vec<PositionModel> = (0..m)
            .into_par_iter()
            .map(|j| {
                let col = order[j];
                let v = coders[col].vocab_size();
                let mut marginal = vec![0u64; v];
                for &t in &tokens[col] {
                    marginal[t as usize] += 1;
                }
                let depth = j.min(context);
                let levels = (1..=depth)
                    .map(|l| {
                        let mut table: BTreeMap<Vec<u32>, Vec<u64>> = BTreeMap::new();
                        for r in 0..n {
                            let ctx: Vec<u32> =
                                order[j - l..j].iter().map(|&pc| tokens[pc][r]).collect();
                            table.entry(ctx).or_insert_with(|| vec![0; v])
                                [tokens[col][r] as usize] += 1;
                        }
                        let (contexts, counts) = table.into_iter().unzip();
                        ContextTable { contexts, counts }
                    })
                    .collect();
                PositionModel {
                    column: col,
                    marginal,
                    levels,
                }
            })
            .collect();

        self.fitted = Some(Fitted {
            n_train: n,
            coders,
            positions,
        });
        Ok(())
    }

    /// The smoothed conditional for position `j` given the tokens already
    /// chosen at positions `0..j`. Position 0 is the raw empirical marginal.
    pub fn distribution(&self, j: usize, prefix: &[u32]) -> Result<(Vec<f64>, Level)> {
        let st = self.state()?;
        let (counts, level, smooth) = select(st, &self.config, j, prefix);
        let v = counts.len() as f64;
        let total: u64 = counts.iter().sum();
        let alpha = if smooth { self.config.alpha } else { 0.0 };
        let denom = total as f64 + alpha * v;
        Ok((
            counts.iter().map(|&c| (c as f64 + alpha) / denom).collect(),
            level,
        ))
    }

    /// Raw counts stored for position `j` under the given context (the
    /// `context.len()` preceding tokens), if that context was observed.
    pub fn context_counts(&self, j: usize, context: &[u32]) -> Result<Option<Vec<u64>>> {
        let st = self.state()?;
        let pos = st.positions.get(j).ok_or(Error::InvalidColumn(j))?;
        if context.is_empty() {
            return Ok(Some(pos.marginal.clone()));
        }
        Ok(pos
            .levels
            .get(context.len() - 1)
            .and_then(|t| t.get(context))
            .map(<[u64]>::to_vec))
    }

    /// Token of a cell for column `col`: its vocabulary index or bin.
    pub fn token(&self, col: usize, cell: &Cell) -> Result<u32> {
        let st = self.state()?;
        match &st.coders[col] {
            ColumnCoder::Categorical { vocab } => vocab
                .binary_search_by(|v| v.as_str().cmp(&cell.lexical))
                .map(|i| i as u32)
                .map_err(|_| {
                    Error::SchemaMismatch(format!(
                        "value `{}` of column `{}` was not seen in training",
                        cell.lexical,
                        self.schema.column(col).name
                    ))
                }),
            ColumnCoder::Numeric { bins, .. } => {
                let v = cell.numeric.ok_or_else(|| {
                    Error::SchemaMismatch(format!("column `{}` expects numbers", self.schema.column(col).name))
                })?;
                Ok(bins.bin(v) as u32)
            }
        }
    }

    pub fn sample(&self, n_out: usize, seed: u64) -> Result<Table> {
        let st = self.state()?;
        let rows: Vec<Record> = (0..n_out)
            .into_par_iter()
            .map(|i| self.sample_row(st, seed, i as u64))
            .collect();
        Table::new(self.schema.clone(), rows)
    }

    fn sample_row(&self, st: &Fitted, seed: u64, i: u64) -> Record {
        let mut rng = stream_rng(seed, i);
        let m = self.schema.len();
        let mut prefix: Vec<u32> = Vec::with_capacity(m);
        let mut cells: Vec<Option<Cell>> = vec![None; m];
        for j in 0..m {
            let (counts, _, smooth) = select(st, &self.config, j, &prefix);
            let alpha = if smooth { self.config.alpha } else { 0.0 };
            let total: u64 = counts.iter().sum();
            let mass = total as f64 + alpha * counts.len() as f64;
            debug_assert!({
                let s: f64 = counts.iter().map(|&c| (c as f64 + alpha) / mass).sum();
                (s - 1.0).abs() < 1e-9
            });
            let mut u = rng.gen::<f64>() * mass;
            let mut token = counts.len() - 1;
            for (t, &c) in counts.iter().enumerate() {
                let w = c as f64 + alpha;
                if w <= 0.0 {
                    continue;
                }
                if u < w {
                    token = t;
                    break;
                }
                u -= w;
            }
            // Float slack can leave `token` on a zero-weight slot of the
            // unsmoothed marginal; walk back to a populated one.
            while !smooth && counts[token] == 0 {
                token -= 1;
            }
            prefix.push(token as u32);
            let col = self.order[j];
            cells[col] = Some(match &st.coders[col] {
                ColumnCoder::Categorical { vocab } => Cell::categorical(vocab[token].clone()),
                ColumnCoder::Numeric { pools, .. } => {
                    let pool = &pools[token];
                    pool[rng.gen_range(0..pool.len())].clone()
                }
            });
        }
        cells.into_iter().map(|c| c.expect("every column drawn")).collect()
    }

    /// Sum over rows and positions of the log-probability of each value
    /// under the conditional sampling would use.
    pub fn loglikelihood(&self, table: &Table) -> Result<f64> {
        let st = self.state()?;
        if table.schema() != &self.schema {
            return Err(Error::SchemaMismatch("table schema differs from model".into()));
        }
        let m = self.schema.len();
        let mut total = 0.0;
        for row in table.rows() {
            let mut prefix = Vec::with_capacity(m);
            for j in 0..m {
                let col = self.order[j];
                let t = self.token(col, &row[col])?;
                let (counts, _, smooth) = select(st, &self.config, j, &prefix);
                let alpha = if smooth { self.config.alpha } else { 0.0 };
                let sum: u64 = counts.iter().sum();
                let p = (counts[t as usize] as f64 + alpha) / (sum as f64 + alpha * counts.len() as f64);
                total += p.ln();
                prefix.push(t);
            }
        }
        Ok(total)
    }

    pub fn n_train(&self) -> Result<usize> {
        Ok(self.state()?.n_train)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: ChainModel = serde_json::from_str(s)?;
        if model.version != MODEL_VERSION {
            return Err(Error::Json(format!("unsupported model version {}", model.version)));
        }
        Permutation::new(model.order.clone())?.check_len(model.schema.len())?;
        Ok(model)
    }
}

/// Picks the counts a draw at position `j` uses, returning whether they are
/// smoothed.
fn select<'a>(st: &'a Fitted, cfg: &ChainConfig, j: usize, prefix: &[u32]) -> (&'a [u64], Level, bool) {
    let pos = &st.positions[j];
    if j == 0 {
        return (&pos.marginal, Level::Marginal, false);
    }
    for l in (1..=pos.levels.len()).rev() {
        if let Some(counts) = pos.levels[l - 1].get(&prefix[j - l..j]) {
            if counts.iter().sum::<u64>() >= cfg.min_count {
                return (counts, Level::Context(l), true);
            }
        }
    }
    (&pos.marginal, Level::Marginal, true)
}

pub fn fit(table: &Table, k: &Permutation, config: ChainConfig) -> Result<ChainModel> {
    let mut model = ChainModel::new(table.schema().clone(), k, config)?;
    model.fit(table)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::load_table_str;

    fn cfg(context: usize) -> ChainConfig {
        ChainConfig {
            context,
            ..Default::default()
        }
    }

    #[test]
    fn constant_table_is_point_mass() {
        let t = load_table_str("a,b\nx,1.5\nx,1.5\nx,1.5\n", None).unwrap();
        let model = fit(&t, &Permutation::identity(2), cfg(1)).unwrap();
        let s = model.sample(20, 3).unwrap();
        assert!(s.rows().iter().all(|r| r == &t.rows()[0]));
        assert_eq!(model.loglikelihood(&t).unwrap(), 0.0);
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let t = load_table_str("a,b\nx,1\ny,2\nx,3\ny,4\n", None).unwrap();
        let model = fit(&t, &Permutation::new(vec![1, 0]).unwrap(), cfg(1)).unwrap();
        assert_eq!(model.sample(50, 9).unwrap(), model.sample(50, 9).unwrap());
        assert_ne!(model.sample(50, 9).unwrap(), model.sample(50, 10).unwrap());
    }

    #[test]
    fn unfitted_model_errors() {
        let t = load_table_str("a,b\nx,1\n", None).unwrap();
        let model = ChainModel::new(t.schema().clone(), &Permutation::identity(2), cfg(1)).unwrap();
        assert_eq!(model.sample(1, 0).unwrap_err(), Error::NotFitted);
        assert_eq!(model.loglikelihood(&t).unwrap_err(), Error::NotFitted);
    }

    #[test]
    fn fit_parameter_errors() {
        let t = load_table_str("a,b\nx,1\n", None).unwrap();
        assert!(matches!(
            fit(&t, &Permutation::identity(3), cfg(1)),
            Err(Error::InvalidPermutation(_))
        ));
        assert!(fit(&t, &Permutation::identity(2), cfg(2)).is_err());
        let bad = ChainConfig {
            alpha: 0.0,
            ..cfg(0)
        };
        assert!(fit(&t, &Permutation::identity(2), bad).is_err());
        let empty = load_table_str("a,b\n", None).unwrap();
        assert!(matches!(
            fit(&empty, &Permutation::identity(2), cfg(1)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn distributions_sum_to_one_and_back_off() {
        let t = load_table_str("a,b\nx,p\nx,q\ny,p\n", None).unwrap();
        let model = fit(&t, &Permutation::identity(2), cfg(1)).unwrap();
        let (d0, l0) = model.distribution(0, &[]).unwrap();
        assert_eq!(l0, Level::Marginal);
        assert!((d0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Contexts have fewer than min_count=5 rows, so position 1 backs off.
        let (d1, l1) = model.distribution(1, &[0]).unwrap();
        assert_eq!(l1, Level::Marginal);
        assert!((d1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let low = ChainConfig { min_count: 1, ..cfg(1) };
        let model = fit(&t, &Permutation::identity(2), low).unwrap();
        assert_eq!(model.distribution(1, &[0]).unwrap().1, Level::Context(1));
    }

    #[test]
    fn json_round_trip() {
        let t = load_table_str("a,b\nx,1\ny,2\nx,3\n", None).unwrap();
        let model = fit(&t, &Permutation::identity(2), cfg(1)).unwrap();
        let back = ChainModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.sample(10, 1).unwrap(), model.sample(10, 1).unwrap());
    }

    #[test]
    fn unseen_category_is_a_schema_mismatch() {
        let t = load_table_str("a,b\nx,1\ny,2\n", None).unwrap();
        let model = fit(&t, &Permutation::identity(2), cfg(1)).unwrap();
        let other = load_table_str("a,b\nz,1\n", None).unwrap();
        assert!(matches!(model.loglikelihood(&other), Err(Error::SchemaMismatch(_))));
    }
}
