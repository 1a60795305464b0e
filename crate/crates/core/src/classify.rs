//! Penalized least-squares linear models on feature vectors, one-versus-all
//! classification and held-out selection of the penalty strength.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the target column in feature CSV files.
pub const LABEL_COLUMN: &str = "__label__";

/// Rows of features with one target each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    /// Where the features came from, e.g. `raw` or a scattering configuration.
    pub provenance: String,
}

impl Dataset {
    pub fn new(columns: Vec<String>, features: Vec<Vec<f64>>, labels: Vec<f64>, provenance: impl Into<String>) -> Result<Dataset> {
        if features.len() != labels.len() {
            return Err(Error::Dimension(format!("{} rows but {} labels", features.len(), labels.len())));
        }
        if let Some((i, row)) = features.iter().enumerate().find(|(_, r)| r.len() != columns.len()) {
            return Err(Error::Dimension(format!("row {i} has {} values, expected {}", row.len(), columns.len())));
        }
        if let Some(i) = features.iter().position(|r| !r.is_empty() && r.iter().all(|v| v.is_nan())) {
            return Err(Error::Format(format!("row {i} is entirely NaN")));
        }
        Ok(Dataset { columns, features, labels, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.columns.len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Seeded random split into `(train, held_out)` with `fraction` of the
    /// rows held out.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Split(format!("held-out fraction {fraction} must lie in [0, 1)")));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let held = (fraction * self.len() as f64).round() as usize;
        let (test, train) = idx.split_at(held);
        let (mut train, mut test) = (train.to_vec(), test.to_vec());
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train), self.subset(&test)))
    }

    /// Distinct class ids. Labels must be non-negative integers.
    pub fn classes(&self) -> Result<Vec<usize>> {
        let mut out = BTreeSet::new();
        for &l in &self.labels {
            if l < 0.0 || l.fract() != 0.0 || !l.is_finite() {
                return Err(Error::Format(format!("label {l} is not a class id")));
            }
            out.insert(l as usize);
        }
        Ok(out.into_iter().collect())
    }

    /// Smallest Euclidean distance between rows with different labels.
    pub fn min_interclass_distance(&self) -> Option<f64> {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .filter_map(|i| {
                (i + 1..n)
                    .filter(|&j| self.labels[j] != self.labels[i])
                    .map(|j| {
                        self.features[i].iter().zip(&self.features[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                    })
                    .reduce(f64::min)
            })
            .reduce_with(f64::min)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.columns.clone();
        header.push(LABEL_COLUMN.to_string());
        w.write_record(&header)?;
        for (row, label) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let label_at = header
            .iter()
            .position(|h| h == LABEL_COLUMN)
            .ok_or_else(|| Error::Format(format!("{} has no {LABEL_COLUMN} column", path.display())))?;
        let columns: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != label_at).map(|(_, h)| h.clone()).collect();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut row = Vec::with_capacity(columns.len());
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("row {}: {field:?} is not a number", line + 1)))?;
                if i == label_at {
                    labels.push(v);
                } else {
                    row.push(v);
                }
            }
            features.push(row);
        }
        Dataset::new(columns, features, labels, path.display().to_string())
    }
}

/// Exponent of the weight penalty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `lambda * sum |w_k|`, solved by coordinate descent.
    Lasso,
    /// `lambda * sum w_k^2`, solved in closed form.
    Ridge,
}

impl Penalty {
    pub fn exponent(self) -> u32 {
        match self {
            Penalty::Lasso => 1,
            Penalty::Ridge => 2,
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.exponent())
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Penalty::Lasso),
            "2" => Ok(Penalty::Ridge),
            _ => Err(Error::InvalidArgument(format!("penalty exponent must be 1 or 2, got {s:?}"))),
        }
    }
}

/// Per-feature centering and scaling fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Constant features keep scale 1. NaN entries are ignored.
    pub fn fit(features: &[Vec<f64>]) -> Standardizer {
        let d = features.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for k in 0..d {
            let vals: Vec<f64> = features.iter().map(|r| r[k]).filter(|v| !v.is_nan()).collect();
            if vals.is_empty() {
                continue;
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
            mean[k] = m;
            if var.sqrt() > 1e-12 * m.abs().max(1.0) {
                scale[k] = var.sqrt();
            }
        }
        Standardizer { mean, scale }
    }

    /// Standardized copy of `row`; NaN becomes 0 (the training mean).
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| if v.is_nan() { 0.0 } else { (v - m) / s })
            .collect()
    }
}

/// `f(x) = <z(x), w> + b` on standardized features `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub penalty: Penalty,
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardizer: Standardizer,
    /// `sum_i (y_i - f(x_i))^2 + lambda * sum_k |w_k|^p` on the training rows.
    pub objective: f64,
}

impl LinearModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    /// Recompute the training objective from the stored weights.
    pub fn evaluate(&self, features: &[Vec<f64>], targets: &[f64]) -> f64 {
        let loss: f64 = features.iter().zip(targets).map(|(r, y)| (y - self.predict(r)).powi(2)).sum();
        loss + self.lambda * penalty_value(self.penalty, &self.weights)
    }

    pub fn training_loss(&self, features: &[Vec<f64>], targets: &[f64]) -> f64 {
        self.evaluate(features, targets) - self.lambda * penalty_value(self.penalty, &self.weights)
    }
}

fn penalty_value(p: Penalty, w: &[f64]) -> f64 {
    match p {
        Penalty::Lasso => w.iter().map(|v| v.abs()).sum(),
        Penalty::Ridge => w.iter().map(|v| v * v).sum(),
    }
}

/// Standardized, column-centered design matrix.
struct Design {
    x: DMatrix<f64>,
    standardizer: Standardizer,
}

impl Design {
    fn new(features: &[Vec<f64>]) -> Result<Design> {
        if features.is_empty() {
            return Err(Error::InvalidArgument("no training rows".into()));
        }
        let standardizer = Standardizer::fit(features);
        let d = standardizer.mean.len();
        let mut x = DMatrix::zeros(features.len(), d);
        for (i, r) in features.iter().enumerate() {
            for (k, v) in standardizer.apply(r).into_iter().enumerate() {
                x[(i, k)] = v;
            }
        }
        // Standardized NaN entries are 0 but the column is not exactly
        // centered then; center again so the intercept stays separable.
        for k in 0..d {
            let m = x.column(k).mean();
            x.column_mut(k).add_scalar_mut(-m);
        }
        Ok(Design { x, standardizer })
    }

    fn model(&self, penalty: Penalty, lambda: f64, w: Vec<f64>, y: &[f64], features: &[Vec<f64>]) -> LinearModel {
        let q = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / q;
        // Intercept for the uncentered standardized rows.
        let z_means = standardized_means(&self.standardizer, features);
        let intercept = y_mean - z_means.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let mut m = LinearModel {
            penalty,
            lambda,
            weights: w,
            intercept,
            standardizer: self.standardizer.clone(),
            objective: 0.0,
        };
        m.objective = m.evaluate(features, y);
        m
    }
}

fn standardized_means(s: &Standardizer, features: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; s.mean.len()];
    for r in features {
        for (a, v) in acc.iter_mut().zip(s.apply(r)) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / features.len() as f64).collect()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")))
    }
}

fn singular() -> Error {
    Error::RegularizationRequired("the design is singular; use lambda > 0".into())
}

/// Cholesky factor of `a + lambda I`, refusing numerically singular systems.
fn factor(a: DMatrix<f64>, lambda: f64) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = a.nrows();
    let scale = a.diagonal().max().max(1.0);
    let chol = (a + DMatrix::identity(n, n) * lambda).cholesky().ok_or_else(singular)?;
    let diag = chol.l_dirty().diagonal();
    if diag.iter().any(|d| d * d <= 1e-12 * scale) {
        return Err(singular());
    }
    Ok(chol)
}

/// Ridge weights for several target vectors sharing one design. Uses the
/// primal normal equations when `d <= q` and the dual form otherwise.
fn ridge_weights(design: &Design, targets: &[DVector<f64>], lambda: f64) -> Result<Vec<DVector<f64>>> {
    let x = &design.x;
    let (q, d) = x.shape();
    let centered: Vec<DVector<f64>> = targets.iter().map(|y| y.add_scalar(-y.mean())).collect();
    if d <= q {
        let chol = factor(x.transpose() * x, lambda)?;
        Ok(centered.iter().map(|y| chol.solve(&(x.transpose() * y))).collect())
    } else {
        let chol = factor(x * x.transpose(), lambda)?;
        Ok(centered.iter().map(|y| x.transpose() * chol.solve(y)).collect())
    }
}

/// Stop tolerance on the relative duality gap of the lasso.
pub const LASSO_GAP: f64 = 1e-6;
const LASSO_CD_ROUNDS: usize = 30;
const LASSO_INNER_SWEEPS: usize = 20;

/// One coordinate-descent pass over `coords`; returns the largest weight change
/// scaled by the column norm.
fn cd_pass(x: &DMatrix<f64>, r: &mut DVector<f64>, w: &mut [f64], col_sq: &[f64], half: f64, coords: &[usize]) -> f64 {
    let mut delta = 0.0f64;
    for &k in coords {
        if col_sq[k] == 0.0 {
            continue;
        }
        let col = x.column(k);
        let rho = col.dot(r) + col_sq[k] * w[k];
        let new = rho.signum() * (rho.abs() - half).max(0.0) / col_sq[k];
        if new != w[k] {
            r.axpy(w[k] - new, &col, 1.0);
            delta = delta.max((new - w[k]).abs() * col_sq[k].sqrt());
            w[k] = new;
        }
    }
    delta
}

/// Rounds of one full coordinate-descent sweep followed by sweeps over the
/// nonzero weights. Returns the last duality gap.
fn cd_rounds(x: &DMatrix<f64>, y: &DVector<f64>, r: &mut DVector<f64>, w: &mut [f64], col_sq: &[f64], half: f64, tol: f64, rounds: usize) -> f64 {
    let all: Vec<usize> = (0..w.len()).collect();
    let mut gap = f64::INFINITY;
    for _ in 0..rounds {
        cd_pass(x, r, w, col_sq, half, &all);
        gap = lasso_gap(x, y, r, w, half);
        if gap <= tol {
            break;
        }
        let active: Vec<usize> = (0..w.len()).filter(|&k| w[k] != 0.0).collect();
        for _ in 0..LASSO_INNER_SWEEPS {
            if cd_pass(x, r, w, col_sq, half, &active) <= 1e-3 * tol.sqrt() {
                break;
            }
        }
    }
    gap
}

/// Lasso on centered `X`, `y`: minimizes `||y - Xw||^2 + lambda ||w||_1` to a
/// duality gap of at most `LASSO_GAP * ||y||^2`.
///
/// Coordinate descent runs first. Near-interpolating problems (small lambda,
/// more features than rows) can stall it; those restart from the exact
/// piecewise-linear solution path and finish with coordinate descent.
fn lasso_weights(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<(Vec<f64>, f64)> {
    let (_, d) = x.shape();
    let y = y.add_scalar(-y.mean());
    let col_sq: Vec<f64> = (0..d).map(|k| x.column(k).norm_squared()).collect();
    if lambda == 0.0 && col_sq.iter().any(|&c| c == 0.0) {
        return Err(Error::RegularizationRequired("a feature is constant on the training rows and lambda is 0".into()));
    }
    let tol = LASSO_GAP * y.norm_squared().max(f64::MIN_POSITIVE);
    let half = lambda / 2.0;
    let mut w = vec![0.0; d];
    let mut r = y.clone();
    let mut gap = cd_rounds(x, &y, &mut r, &mut w, &col_sq, half, tol, LASSO_CD_ROUNDS);
    if gap > tol {
        w = lasso_path(x, &y, half, &col_sq);
        r = &y - x * DVector::from_column_slice(&w);
        gap = cd_rounds(x, &y, &mut r, &mut w, &col_sq, half, tol, LASSO_CD_ROUNDS);
    }
    if gap <= tol {
        Ok((w, gap))
    } else {
        Err(Error::Convergence(format!("lasso stopped at duality gap {gap:.3e}, tolerance {tol:.3e}")))
    }
}

/// Follows the solution of `0.5 ||y - Xw||^2 + a ||w||_1` from `a = max |X^T y|`
/// down to the requested `a`, one breakpoint at a time.
fn lasso_path(x: &DMatrix<f64>, y: &DVector<f64>, a: f64, col_sq: &[f64]) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut w = vec![0.0; d];
    let mut r = y.clone();
    let c = x.tr_mul(&r);
    let j0 = c.iamax();
    let mut level = c[j0].abs();
    if level <= a || col_sq[j0] == 0.0 {
        return w;
    }
    let mut active = vec![j0];
    let mut signs = vec![c[j0].signum()];
    let mut usable: Vec<bool> = col_sq.iter().map(|&v| v > 0.0).collect();
    usable[j0] = false;
    let Some(mut chol) = DMatrix::from_element(1, 1, col_sq[j0]).cholesky() else { return w };

    enum Event {
        Target,
        Enter(usize),
        Leave(usize),
    }
    for _ in 0..4 * (n + d) {
        let c = x.tr_mul(&r);
        let dir = chol.solve(&DVector::from_column_slice(&signs));
        let mut u = DVector::zeros(n);
        for (i, &k) in active.iter().enumerate() {
            u.axpy(dir[i], &x.column(k), 1.0);
        }
        let au = x.tr_mul(&u);
        let mut gamma = level - a;
        let mut event = Event::Target;
        for j in (0..d).filter(|&j| usable[j]) {
            for (num, den) in [(level - c[j], 1.0 - au[j]), (level + c[j], 1.0 + au[j])] {
                if den > 1e-12 {
                    let g = num / den;
                    if g > 0.0 && g < gamma {
                        gamma = g;
                        event = Event::Enter(j);
                    }
                }
            }
        }
        for (i, &k) in active.iter().enumerate() {
            let g = -w[k] / dir[i];
            if g > 0.0 && g < gamma {
                gamma = g;
                event = Event::Leave(i);
            }
        }
        for (i, &k) in active.iter().enumerate() {
            w[k] += gamma * dir[i];
        }
        r.axpy(-gamma, &u, 1.0);
        level -= gamma;
        match event {
            Event::Target => break,
            Event::Enter(j) => {
                usable[j] = false;
                let mut col = DVector::zeros(active.len() + 1);
                for (i, &k) in active.iter().enumerate() {
                    col[i] = x.column(k).dot(&x.column(j));
                }
                col[active.len()] = col_sq[j];
                let grown = chol.insert_column(active.len(), col);
                let pivot = grown.l_dirty()[(active.len(), active.len())];
                // A column in the span of the active ones cannot enter.
                if pivot.is_finite() && pivot > 1e-8 * col_sq[j].sqrt() {
                    chol = grown;
                    let cj = x.column(j).dot(&r);
                    signs.push(cj.signum());
                    active.push(j);
                }
            }
            Event::Leave(i) => {
                let k = active.remove(i);
                signs.remove(i);
                w[k] = 0.0;
                usable[k] = true;
                chol = chol.remove_column(i);
                if active.is_empty() {
                    break;
                }
            }
        }
    }
    w
}

/// Duality gap of `0.5 ||y - Xw||^2 + a ||w||_1`, times two to match the
/// unhalved objective.
fn lasso_gap(x: &DMatrix<f64>, y: &DVector<f64>, r: &DVector<f64>, w: &[f64], a: f64) -> f64 {
    let primal = 0.5 * r.norm_squared() + a * w.iter().map(|v| v.abs()).sum::<f64>();
    let corr = (x.transpose() * r).amax();
    let s = if corr > a { a / corr } else { 1.0 };
    let theta = r * s;
    let dual = 0.5 * y.norm_squared() - 0.5 * (y - &theta).norm_squared();
    2.0 * (primal - dual).max(0.0)
}

/// Fit one regression model on `dataset.labels`.
pub fn fit(dataset: &Dataset, penalty: Penalty, lambda: f64) -> Result<LinearModel> {
    check_lambda(lambda)?;
    let design = Design::new(&dataset.features)?;
    let y = DVector::from_column_slice(&dataset.labels);
    let w = match penalty {
        Penalty::Ridge => ridge_weights(&design, &[y], lambda)?.remove(0).as_slice().to_vec(),
        Penalty::Lasso => lasso_weights(&design.x, &y, lambda)?.0,
    };
    Ok(design.model(penalty, lambda, w, &dataset.labels, &dataset.features))
}

/// One binary `+1 / -1` scorer per class, predicting the class of maximal score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvaModel {
    pub classes: Vec<usize>,
    pub models: Vec<LinearModel>,
}

impl OvaModel {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.models.iter().map(|m| m.predict(row)).collect()
    }

    /// Class of maximal score; ties go to the smaller class id.
    pub fn predict(&self, row: &[f64]) -> usize {
        let s = self.scores(row);
        let mut best = 0;
        for (i, v) in s.iter().enumerate() {
            if *v > s[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data
            .features
            .par_iter()
            .zip(&data.labels)
            .filter(|(r, &l)| self.predict(r) as f64 == l)
            .count();
        hits as f64 / data.len() as f64
    }
}

fn ova_targets(labels: &[f64], class: usize) -> Vec<f64> {
    labels.iter().map(|&l| if l == class as f64 { 1.0 } else { -1.0 }).collect()
}

/// One-versus-all fit on `train`. Ridge shares a single factorization across
/// classes; lasso classes run in parallel.
pub fn fit_ova(train: &Dataset, penalty: Penalty, lambda: f64) -> Result<OvaModel> {
    check_lambda(lambda)?;
    let classes = train.classes()?;
    if classes.len() < 2 {
        return Err(Error::Split(format!("training rows contain {} class(es), need at least 2", classes.len())));
    }
    let design = Design::new(&train.features)?;
    let targets: Vec<Vec<f64>> = classes.iter().map(|&c| ova_targets(&train.labels, c)).collect();
    let weights: Vec<Vec<f64>> = match penalty {
        Penalty::Ridge => {
            let ys: Vec<DVector<f64>> = targets.iter().map(|t| DVector::from_column_slice(t)).collect();
            ridge_weights(&design, &ys, lambda)?.into_iter().map(|w| w.as_slice().to_vec()).collect()
        }
        Penalty::Lasso => targets
            .par_iter()
            .map(|t| lasso_weights(&design.x, &DVector::from_column_slice(t), lambda).map(|r| r.0))
            .collect::<Result<_>>()?,
    };
    let models = weights
        .into_iter()
        .zip(&targets)
        .map(|(w, t)| design.model(penalty, lambda, w, t, &train.features))
        .collect();
    Ok(OvaModel { classes, models })
}

/// Default logarithmic penalty grid.
pub fn default_lambda_grid() -> Vec<f64> {
    (-3..=6).map(|e| 10f64.powi(e)).collect()
}

/// Held-out fraction used for penalty selection.
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub penalty: Penalty,
    pub lambda: f64,
    /// Validation accuracy for each grid value.
    pub validation: BTreeMap<String, f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub features: usize,
}

/// Choose lambda on a seeded 20% split of `train` (ties go to the larger
/// value), refit on all of `train` and score `test`.
pub fn classify_ova(
    train: &Dataset,
    test: &Dataset,
    penalty: Penalty,
    lambdas: &[f64],
    seed: u64,
) -> Result<(OvaModel, ClassificationReport)> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if train.dims() != test.dims() {
        return Err(Error::Dimension(format!("train has {} features, test has {}", train.dims(), test.dims())));
    }
    let mut validation = BTreeMap::new();
    let lambda = if lambdas.len() == 1 {
        lambdas[0]
    } else {
        let (fit_part, held) = train.split(VALIDATION_FRACTION, seed)?;
        let mut best = (f64::NEG_INFINITY, lambdas[0]);
        for &l in lambdas {
            let acc = fit_ova(&fit_part, penalty, l)?.accuracy(&held);
            validation.insert(format!("{l:e}"), acc);
            if acc > best.0 || (acc == best.0 && l > best.1) {
                best = (acc, l);
            }
        }
        best.1
    };
    let model = fit_ova(train, penalty, lambda)?;
    let report = ClassificationReport {
        penalty,
        lambda,
        validation,
        train_accuracy: model.accuracy(train),
        test_accuracy: model.accuracy(test),
        train_rows: train.len(),
        test_rows: test.len(),
        features: train.dims(),
    };
    Ok((model, report))
}
