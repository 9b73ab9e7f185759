//! Correlation and reliability statistics, and cross-validated tuning.

use rand::seq::SliceRandom;

use crate::select::RankedList;
use crate::seed;
use crate::{Error, Result};

/// Kendall tau-a between two paired score vectors (no tie correction).
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let b = (y[i] - y[j]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            s += a * b;
        }
    }
    Some(s as f64 / (n * (n - 1) / 2) as f64)
}

/// Tau-a between the orders two rankings give to the collections both of
/// them considered and listed. `None` with fewer than two common items.
pub fn kendall_tau(a: &RankedList, b: &RankedList) -> Option<f64> {
    let pos_b: std::collections::HashMap<&str, usize> = b
        .entries
        .iter()
        .enumerate()
        .filter(|(_, (c, _))| b.considered.contains(c))
        .map(|(i, (c, _))| (c.as_str(), i))
        .collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, (c, _)) in a.entries.iter().enumerate() {
        if !a.considered.contains(c) {
            continue;
        }
        if let Some(j) = pos_b.get(c.as_str()) {
            // Earlier position means a higher rank, so negate.
            x.push(-(i as f64));
            y.push(-(*j as f64));
        }
    }
    kendall_tau_a(&x, &y)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pop_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Undefined(format!(
            "pearson needs two equal-length samples of size >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("pearson correlation with zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Runs (rows) by topics (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(rows: Vec<String>, columns: Vec<String>, cells: Vec<Vec<f64>>) -> Result<Self> {
        if cells.len() != rows.len() || cells.iter().any(|r| r.len() != columns.len()) {
            return Err(Error::Invariant("score matrix is not rectangular".into()));
        }
        if cells.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("score matrix has a missing or non-finite cell".into()));
        }
        Ok(ScoreMatrix { rows, columns, cells })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cells.iter().map(|r| r[j]).collect()
    }

    /// Mean of each row over the given columns.
    pub fn row_means(&self, columns: &[usize]) -> Vec<f64> {
        self.cells
            .iter()
            .map(|r| columns.iter().map(|j| r[*j]).sum::<f64>() / columns.len() as f64)
            .collect()
    }
}

/// Cronbach's alpha with topics as items, using population variances over runs.
pub fn cronbach_alpha(m: &ScoreMatrix) -> Result<f64> {
    let k = m.columns.len();
    if k < 2 || m.rows.is_empty() {
        return Err(Error::Undefined(format!(
            "cronbach alpha needs >= 2 items and >= 1 run, got {k} items and {} runs",
            m.rows.len()
        )));
    }
    let item_var: f64 = (0..k).map(|j| pop_variance(&m.column(j))).sum();
    let totals: Vec<f64> = m.cells.iter().map(|r| r.iter().sum()).collect();
    let total_var = pop_variance(&totals);
    if total_var == 0.0 {
        return Err(Error::Undefined("cronbach alpha with zero total-score variance".into()));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

/// Fold of each topic: a seeded shuffle dealt round-robin, so fold sizes
/// differ by at most one.
pub fn fold_assignment(num_topics: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..num_topics).collect();
    order.shuffle(&mut seed::rng(seed, "cross-validation"));
    let mut fold = vec![0; num_topics];
    for (i, t) in order.into_iter().enumerate() {
        fold[t] = i % folds;
    }
    fold
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Grid index reported as the tuned setting.
    pub chosen: usize,
    /// Training winner per fold.
    pub fold_winners: Vec<usize>,
    /// Held-out mean metric per fold.
    pub fold_scores: Vec<f64>,
    /// Metric of each topic under its own fold's winner.
    pub heldout: Vec<f64>,
    /// Fold of each topic.
    pub fold_of: Vec<usize>,
}

impl CvResult {
    /// Grid index applied to topic `t` when it was held out.
    pub fn winner_for(&self, t: usize) -> usize {
        self.fold_winners[self.fold_of[t]]
    }
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// K-fold selection over `metric[g][t]` (grid point g, topic t). Each fold's
/// winner maximizes the mean over the other folds; the reported setting is
/// the fold winner with the best held-out mean. Ties go to the earlier grid
/// point.
pub fn cross_validate(metric: &[Vec<f64>], folds: usize, seed: u64) -> Result<CvResult> {
    let grid = metric.len();
    if grid == 0 {
        return Err(Error::Config("cross-validation grid is empty".into()));
    }
    let topics = metric[0].len();
    if metric.iter().any(|r| r.len() != topics) {
        return Err(Error::Invariant("metric rows differ in topic count".into()));
    }
    if folds == 0 || topics < folds {
        return Err(Error::Config(format!("cross-validation needs >= {folds} topics, got {topics}")));
    }
    let fold = fold_assignment(topics, folds, seed);
    let mut fold_winners = Vec::with_capacity(folds);
    let mut fold_scores = Vec::with_capacity(folds);
    let mut heldout = vec![0.0; topics];
    for f in 0..folds {
        let train: Vec<usize> = (0..topics).filter(|t| fold[*t] != f).collect();
        let test: Vec<usize> = (0..topics).filter(|t| fold[*t] == f).collect();
        let score = |g: usize, set: &[usize]| {
            if set.is_empty() {
                0.0
            } else {
                set.iter().map(|t| metric[g][*t]).sum::<f64>() / set.len() as f64
            }
        };
        let winner = argmax_first((0..grid).map(|g| score(g, &train)));
        for t in &test {
            heldout[*t] = metric[winner][*t];
        }
        fold_winners.push(winner);
        fold_scores.push(score(winner, &test));
    }
    // Best held-out fold winner; ties to the earlier grid point.
    let mut chosen = fold_winners[0];
    let mut best = f64::NEG_INFINITY;
    for (w, s) in fold_winners.iter().zip(&fold_scores) {
        if *s > best || (*s == best && *w < chosen) {
            best = *s;
            chosen = *w;
        }
    }
    Ok(CvResult {
        chosen,
        fold_winners,
        fold_scores,
        heldout,
        fold_of: fold,
    })
}
