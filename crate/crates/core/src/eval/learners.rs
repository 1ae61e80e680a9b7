//! Small from-scratch learners with fixed hyperparameters.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::Matrix;
use crate::rng::stream_rng;

pub const GD_EPOCHS: usize = 500;
pub const GD_STEP: f64 = 0.1;
pub const GD_L2: f64 = 1e-4;
pub const FOREST_TREES: usize = 100;
pub const FOREST_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    LogisticRegression,
    RandomForest,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 2] = [LearnerKind::LogisticRegression, LearnerKind::RandomForest];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::LogisticRegression => "logistic_regression",
            LearnerKind::RandomForest => "random_forest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || (s == "logistic" && *k == Self::LogisticRegression) || (s == "forest" && *k == Self::RandomForest))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Learner {
    pub kind: LearnerKind,
    pub seed: u64,
}

/// Targets are either class indices `0..n_classes` or real values.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Classes { y: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

#[derive(Debug, Clone)]
pub enum Model {
    Softmax { weights: Vec<f64>, classes: usize, d: usize },
    Linear { weights: Vec<f64>, d: usize, y_mean: f64, y_std: f64 },
    Forest { trees: Vec<Node>, classes: Option<usize> },
}

impl Learner {
    pub fn fit(&self, x: &Matrix, target: &Target) -> Model {
        match (self.kind, target) {
            (LearnerKind::LogisticRegression, Target::Classes { y, n_classes }) => fit_softmax(x, y, *n_classes),
            (LearnerKind::LogisticRegression, Target::Values(y)) => fit_linear(x, y),
            (LearnerKind::RandomForest, t) => fit_forest(x, t, self.seed),
        }
    }
}

impl Model {
    /// Class index (ties to the smallest) or regression value, as f64.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Model::Softmax { weights, classes, d } => {
                let scores = softmax_scores(weights, *classes, *d, row);
                argmax(&scores) as f64
            }
            Model::Linear {
                weights,
                d,
                y_mean,
                y_std,
            } => linear(weights, *d, row) * y_std + y_mean,
            Model::Forest { trees, classes } => match classes {
                Some(k) => {
                    let mut votes = vec![0.0; *k];
                    for t in trees {
                        for (v, p) in votes.iter_mut().zip(t.leaf(row)) {
                            *v += p;
                        }
                    }
                    argmax(&votes) as f64
                }
                None => trees.iter().map(|t| t.leaf(row)[0]).sum::<f64>() / trees.len() as f64,
            },
        }
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows).map(|i| self.predict(x.row(i))).collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = i;
        }
    }
    best
}

/// Weights laid out per class as `[bias, w_1..w_d]`.
fn softmax_scores(w: &[f64], k: usize, d: usize, row: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = (0..k)
        .map(|c| {
            let wc = &w[c * (d + 1)..(c + 1) * (d + 1)];
            wc[0] + wc[1..].iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn fit_softmax(x: &Matrix, y: &[usize], k: usize) -> Model {
    let d = x.cols;
    let k = k.max(1);
    let mut w = vec![0.0; k * (d + 1)];
    let n = x.rows.max(1) as f64;
    let mut grad = vec![0.0; w.len()];
    for _ in 0..GD_EPOCHS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..x.rows {
            let row = x.row(i);
            let p = softmax_scores(&w, k, d, row);
            for c in 0..k {
                let err = p[c] - (y[i] == c) as u8 as f64;
                let g = &mut grad[c * (d + 1)..(c + 1) * (d + 1)];
                g[0] += err;
                for (gj, xj) in g[1..].iter_mut().zip(row) {
                    *gj += err * xj;
                }
            }
        }
        for c in 0..k {
            for j in 0..=d {
                let idx = c * (d + 1) + j;
                let reg = if j == 0 { 0.0 } else { GD_L2 * w[idx] };
                w[idx] -= GD_STEP * (grad[idx] / n + reg);
            }
        }
    }
    Model::Softmax { weights: w, classes: k, d }
}

fn linear(w: &[f64], _d: usize, row: &[f64]) -> f64 {
    w[0] + w[1..].iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
}

/// Least squares by gradient descent on a standardized target.
fn fit_linear(x: &Matrix, y: &[f64]) -> Model {
    let d = x.cols;
    let n = x.rows.max(1) as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
    let y_std = if var > 0.0 { var.sqrt() } else { 1.0 };
    let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();
    let mut w = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    for _ in 0..GD_EPOCHS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..x.rows {
            let row = x.row(i);
            let err = linear(&w, d, row) - ys[i];
            grad[0] += err;
            for (g, xj) in grad[1..].iter_mut().zip(row) {
                *g += err * xj;
            }
        }
        for j in 0..=d {
            let reg = if j == 0 { 0.0 } else { GD_L2 * w[j] };
            w[j] -= GD_STEP * (grad[j] / n + reg);
        }
    }
    Model::Linear {
        weights: w,
        d,
        y_mean,
        y_std,
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    /// Class distribution, or a single mean for regression.
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut n = self;
        loop {
            match n {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => n = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

struct TreeData<'a> {
    x: &'a Matrix,
    target: &'a Target,
    mtry: usize,
}

impl TreeData<'_> {
    fn leaf_value(&self, idx: &[usize]) -> Vec<f64> {
        match self.target {
            Target::Classes { y, n_classes } => {
                let mut p = vec![0.0; *n_classes];
                for &i in idx {
                    p[y[i]] += 1.0;
                }
                let n = idx.len() as f64;
                p.iter_mut().for_each(|v| *v /= n);
                p
            }
            Target::Values(y) => vec![idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64],
        }
    }

    fn pure(&self, idx: &[usize]) -> bool {
        match self.target {
            Target::Classes { y, .. } => idx.iter().all(|&i| y[i] == y[idx[0]]),
            Target::Values(y) => idx.iter().all(|&i| y[i] == y[idx[0]]),
        }
    }

    /// Best (impurity, threshold) split of `idx` on feature `f`.
    fn best_split(&self, idx: &mut [usize], f: usize) -> Option<(f64, f64)> {
        let x = self.x;
        idx.sort_by(|&a, &b| x.row(a)[f].total_cmp(&x.row(b)[f]));
        let n = idx.len();
        let mut best: Option<(f64, f64)> = None;
        match self.target {
            Target::Classes { y, n_classes } => {
                let mut right = vec![0.0; *n_classes];
                for &i in idx.iter() {
                    right[y[i]] += 1.0;
                }
                let mut left = vec![0.0; *n_classes];
                let gini = |c: &[f64], m: f64| 1.0 - c.iter().map(|v| (v / m).powi(2)).sum::<f64>();
                for s in 1..n {
                    let i = idx[s - 1];
                    left[y[i]] += 1.0;
                    right[y[i]] -= 1.0;
                    let (a, b) = (x.row(i)[f], x.row(idx[s])[f]);
                    if a == b {
                        continue;
                    }
                    let (nl, nr) = (s as f64, (n - s) as f64);
                    let imp = (nl * gini(&left, nl) + nr * gini(&right, nr)) / n as f64;
                    if best.is_none_or(|(bi, _)| imp < bi) {
                        best = Some((imp, a + (b - a) / 2.0));
                    }
                }
            }
            Target::Values(y) => {
                let (mut rs, mut rq) = (0.0, 0.0);
                for &i in idx.iter() {
                    rs += y[i];
                    rq += y[i] * y[i];
                }
                let (mut ls, mut lq) = (0.0, 0.0);
                for s in 1..n {
                    let i = idx[s - 1];
                    ls += y[i];
                    lq += y[i] * y[i];
                    rs -= y[i];
                    rq -= y[i] * y[i];
                    let (a, b) = (x.row(i)[f], x.row(idx[s])[f]);
                    if a == b {
                        continue;
                    }
                    let (nl, nr) = (s as f64, (n - s) as f64);
                    let sse = (lq - ls * ls / nl) + (rq - rs * rs / nr);
                    let imp = sse / n as f64;
                    if best.is_none_or(|(bi, _)| imp < bi) {
                        best = Some((imp, a + (b - a) / 2.0));
                    }
                }
            }
        }
        best
    }

    fn grow<R: Rng>(&self, idx: &mut [usize], depth: usize, rng: &mut R) -> Node {
        if depth == FOREST_DEPTH || idx.len() < 2 || self.pure(idx) {
            return Node::Leaf(self.leaf_value(idx));
        }
        let mut feats: Vec<usize> = (0..self.x.cols).collect();
        feats.shuffle(rng);
        feats.truncate(self.mtry);
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &feats {
            if let Some((imp, thr)) = self.best_split(idx, f) {
                if best.is_none_or(|(bi, _, _)| imp < bi) {
                    best = Some((imp, f, thr));
                }
            }
        }
        let Some((_, f, thr)) = best else {
            return Node::Leaf(self.leaf_value(idx));
        };
        let x = self.x;
        idx.sort_by(|&a, &b| x.row(a)[f].total_cmp(&x.row(b)[f]));
        let cut = idx.partition_point(|&i| x.row(i)[f] <= thr);
        let (l, r) = idx.split_at_mut(cut);
        Node::Split {
            feature: f,
            threshold: thr,
            left: Box::new(self.grow(l, depth + 1, rng)),
            right: Box::new(self.grow(r, depth + 1, rng)),
        }
    }
}

fn fit_forest(x: &Matrix, target: &Target, seed: u64) -> Model {
    let d = x.cols.max(1);
    let (classes, mtry) = match target {
        Target::Classes { n_classes, .. } => (Some(*n_classes), (d as f64).sqrt().ceil() as usize),
        Target::Values(_) => (None, (d / 3).max(1)),
    };
    let data = TreeData {
        x,
        target,
        mtry: mtry.clamp(1, d),
    };
    let n = x.rows;
    let trees = (0..FOREST_TREES as u64)
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            if n == 0 || x.cols == 0 {
                let all: Vec<usize> = (0..n).collect();
                return Node::Leaf(if n == 0 {
                    vec![0.0; classes.unwrap_or(1)]
                } else {
                    data.leaf_value(&all)
                });
            }
            let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            data.grow(&mut idx, 0, &mut rng)
        })
        .collect();
    Model::Forest { trees, classes }
}
