//! Quality metrics for synthetic tables: rule violations, low-order
//! statistics, a real-vs-synthetic discriminator and downstream utility.

pub mod features;
pub mod learners;
pub mod rules;
pub mod stats;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::table::{ColumnKind, Record, Table};
use features::Encoder;
pub use learners::{Learner, LearnerKind};
use learners::Target;
pub use rules::{violation_rate, Region, RuleResult, RuleSpec};
pub use stats::{ks_statistic, pair_trends_score, shape_score, total_variation};

pub const MIN_ROWS_PER_CLASS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorReport {
    pub accuracy: f64,
    pub fold_accuracy: Vec<f64>,
    pub rows_per_class: usize,
    pub folds: usize,
    pub seed: u64,
}

/// Fold index per row. Rows sharing a group id always share a fold, so a
/// record and its exact duplicate are never split between training and
/// held-out data. Groups are dealt in seeded order to the fold holding the
/// fewest rows of their classes, keeping folds stratified.
pub fn stratified_folds(labels: &[usize], groups: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    let mut order: Vec<Vec<usize>> = members.into_values().collect();
    order.shuffle(&mut seeded(seed));
    // Larger groups first so singletons can even out the counts.
    order.sort_by_key(|g| std::cmp::Reverse(g.len()));
    let mut load = vec![vec![0usize; n_classes]; folds];
    let mut out = vec![0; labels.len()];
    for g in order {
        let mut need = vec![0usize; n_classes];
        for &i in &g {
            need[labels[i]] += 1;
        }
        let cost = |f: usize| -> (usize, usize) {
            let c: usize = (0..n_classes).filter(|&c| need[c] > 0).map(|c| load[f][c]).sum();
            (c, load[f].iter().sum())
        };
        let f = (0..folds).min_by_key(|&f| cost(f)).expect("at least one fold");
        for &i in &g {
            out[i] = f;
            load[f][labels[i]] += 1;
        }
    }
    out
}

/// Held-out accuracy of telling real rows (label 1) from synthetic
/// rows (label 0) under stratified cross-validation. The larger table is
/// subsampled so both classes have the same size.
pub fn discriminator_score(
    real: &Table,
    synth: &Table,
    learner: &Learner,
    folds: usize,
    seed: u64,
) -> Result<DiscriminatorReport> {
    if real.schema() != synth.schema() {
        return Err(Error::SchemaMismatch("real and synthetic schemas differ".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    let per_class = real.n_rows().min(synth.n_rows());
    if per_class < MIN_ROWS_PER_CLASS.max(folds) {
        return Err(Error::TooFewRows(format!(
            "{per_class} rows per class, need at least {}",
            MIN_ROWS_PER_CLASS.max(folds)
        )));
    }
    let mut rng = seeded(seed);
    let mut pick = |t: &Table| -> Vec<Record> {
        let mut idx: Vec<usize> = (0..t.n_rows()).collect();
        if idx.len() > per_class {
            idx.shuffle(&mut rng);
            idx.truncate(per_class);
            idx.sort_unstable();
        }
        idx.into_iter().map(|i| t.rows()[i].clone()).collect()
    };
    let mut rows = pick(real);
    rows.extend(pick(synth));
    let combined = Table::with_schema_unchecked(real.schema().clone(), rows);
    let labels: Vec<usize> = (0..2 * per_class).map(|i| (i < per_class) as usize).collect();
    let mut ids: HashMap<Vec<&str>, usize> = HashMap::new();
    let groups: Vec<usize> = combined
        .rows()
        .iter()
        .map(|r| {
            let next = ids.len();
            *ids.entry(r.iter().map(|c| c.lexical.as_str()).collect()).or_insert(next)
        })
        .collect();
    let fold_of = stratified_folds(&labels, &groups, folds, seed);
    let all: Vec<usize> = (0..combined.n_rows()).collect();

    let used: Vec<usize> = (0..folds).filter(|f| fold_of.contains(f)).collect();
    if used.len() < 2 {
        return Err(Error::TooFewRows("fewer than two distinct records to split into folds".into()));
    }

    let scored: Vec<(usize, usize)> = used
        .par_iter()
        .map(|&f| {
            let train: Vec<usize> = all.iter().copied().filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = all.iter().copied().filter(|&i| fold_of[i] == f).collect();
            let enc = Encoder::fit(&combined, &all, &train, None);
            let x = enc.transform(&combined, &train);
            let target = Target::Classes {
                y: train.iter().map(|&i| labels[i]).collect(),
                n_classes: 2,
            };
            let model = Learner {
                kind: learner.kind,
                seed: learner.seed.wrapping_add(f as u64),
            }
            .fit(&x, &target);
            let xt = enc.transform(&combined, &test);
            let pred = model.predict_all(&xt);
            let correct = test.iter().zip(pred).filter(|(&i, p)| *p as usize == labels[i]).count();
            (correct, test.len())
        })
        .collect();
    // Pooled over every held-out row; folds can differ in size because
    // duplicate records move together.
    let (correct, total) = scored.iter().fold((0, 0), |(c, t), &(a, b)| (c + a, t + b));
    Ok(DiscriminatorReport {
        accuracy: correct as f64 / total as f64,
        fold_accuracy: scored.iter().map(|&(c, t)| c as f64 / t as f64).collect(),
        rows_per_class: per_class,
        folds,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub task: Task,
    pub target: String,
    /// Accuracy for classification (higher is better), MAPE for
    /// regression (lower is better).
    pub score: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Test rows with a zero target, left out of MAPE.
    pub zero_targets_excluded: usize,
}

/// Trains on `train` and scores on `test`.
pub fn mle_score(
    train: &Table,
    test: &Table,
    target: &str,
    task: Task,
    learner: &Learner,
) -> Result<MleReport> {
    if train.schema() != test.schema() {
        return Err(Error::SchemaMismatch("train and test schemas differ".into()));
    }
    let t = train.schema().require(target)?;
    let kind = train.schema().kind(t);
    match (task, kind) {
        (Task::Classification, ColumnKind::Categorical) | (Task::Regression, ColumnKind::Numeric) => {}
        _ => {
            return Err(Error::KindMismatch(format!(
                "{task:?} needs a {} target, `{target}` is {kind:?}",
                if task == Task::Classification { "categorical" } else { "numeric" }
            )))
        }
    }
    if train.n_rows() < 2 || test.n_rows() == 0 {
        return Err(Error::TooFewRows("need at least 2 training rows and 1 test row".into()));
    }
    let train_idx: Vec<usize> = (0..train.n_rows()).collect();
    let test_idx: Vec<usize> = (0..test.n_rows()).collect();
    let enc = Encoder::fit(train, &train_idx, &train_idx, Some(t));
    let x = enc.transform(train, &train_idx);
    let xt = enc.transform(test, &test_idx);
    let (score, zero) = match task {
        Task::Classification => {
            let mut classes: Vec<&str> = train.lexical_column(t);
            classes.sort_unstable();
            classes.dedup();
            let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
            let y = train.lexical_column(t).iter().map(|c| index[c]).collect();
            let model = learner.fit(
                &x,
                &Target::Classes {
                    y,
                    n_classes: classes.len(),
                },
            );
            let pred = model.predict_all(&xt);
            let truth = test.lexical_column(t);
            let correct = pred.iter().zip(truth).filter(|(p, c)| classes[**p as usize] == *c).count();
            (correct as f64 / test.n_rows() as f64, 0)
        }
        Task::Regression => {
            let y = train.numeric_column(t).expect("numeric");
            let model = learner.fit(&x, &Target::Values(y));
            let pred = model.predict_all(&xt);
            let truth = test.numeric_column(t).expect("numeric");
            let (mut sum, mut used) = (0.0, 0);
            for (p, y) in pred.iter().zip(&truth) {
                if *y != 0.0 {
                    sum += ((y - p) / y).abs();
                    used += 1;
                }
            }
            let mape = if used == 0 { 0.0 } else { sum / used as f64 };
            (mape, truth.len() - used)
        }
    };
    Ok(MleReport {
        task,
        target: target.to_string(),
        score,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        zero_targets_excluded: zero,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleSpec {
    pub target: String,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub learners: Vec<LearnerKind>,
    pub folds: usize,
    pub seed: u64,
    pub mle: Option<MleSpec>,
}

impl EvalOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            learners: LearnerKind::ALL.to_vec(),
            folds: 5,
            seed,
            mle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub violations: Vec<RuleResult>,
    pub shape: stats::ShapeReport,
    pub pair_trends: stats::PairReport,
    pub discriminator: BTreeMap<String, DiscriminatorReport>,
    /// MLE scores when trained on the synthetic table and tested on real.
    pub mle: BTreeMap<String, MleReport>,
    pub options: EvalOptions,
}

/// All metrics for one (real, synthetic) pair. The real table doubles as
/// the FD rule reference and the MLE test set.
pub fn evaluate(real: &Table, synth: &Table, rules: &[RuleSpec], opts: &EvalOptions) -> Result<MetricsReport> {
    let violations = violation_rate(synth, rules, Some(real))?;
    let shape = stats::shape_report(real, synth)?;
    let pair_trends = if real.n_cols() >= 2 {
        stats::pair_trends_report(real, synth)?
    } else {
        stats::PairReport {
            score: 1.0,
            pairs: Vec::new(),
            skipped: Vec::new(),
        }
    };
    let mut discriminator = BTreeMap::new();
    let mut mle = BTreeMap::new();
    for &kind in &opts.learners {
        let learner = Learner { kind, seed: opts.seed };
        discriminator.insert(
            kind.name().to_string(),
            discriminator_score(real, synth, &learner, opts.folds, opts.seed)?,
        );
        if let Some(spec) = &opts.mle {
            mle.insert(kind.name().to_string(), mle_score(synth, real, &spec.target, spec.task, &learner)?);
        }
    }
    Ok(MetricsReport {
        violations,
        shape,
        pair_trends,
        discriminator,
        mle,
        options: opts.clone(),
    })
}

impl MetricsReport {
    /// Aligned plain-text summary.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        for v in &self.violations {
            lines.push((
                format!("violation {}", v.rule),
                format!("{:.4} ({}/{}, unseen {})", v.rate, v.violations, v.checked, v.unseen),
            ));
        }
        lines.push(("shape score".into(), format!("{:.4}", self.shape.score)));
        lines.push(("pair trends score".into(), format!("{:.4}", self.pair_trends.score)));
        for (k, d) in &self.discriminator {
            lines.push((format!("discriminator {k}"), format!("{:.4}", d.accuracy)));
        }
        for (k, m) in &self.mle {
            let metric = match m.task {
                Task::Classification => "accuracy",
                Task::Regression => "mape",
            };
            lines.push((format!("mle {k} {metric}"), format!("{:.4}", m.score)));
        }
        let width = lines.iter().map(|(a, _)| a.len()).max().unwrap_or(0);
        lines.into_iter().map(|(a, b)| format!("{a:<width$}  {b}\n")).collect()
    }
}
