//! Dataset ingestion, synthetic generators, standardization and stratified
//! k-fold splitting.
//!
//! All generators draw from a ChaCha8 stream seeded with the caller's seed,
//! so a `(generator, parameters, seed)` triple always produces bit-identical
//! data.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::fmt_f64;

/// Feature matrix with dense integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub n_per_class: Vec<usize>,
    /// Original label text per class index.
    pub class_names: Vec<String>,
}

impl DataSet {
    /// Build a dataset from features and labels in `0..C`. Every class in
    /// `0..=max(label)` must be present.
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let names = (0..n_classes).map(|c| c.to_string()).collect();
        Self::with_names(features, labels, names)
    }

    pub fn with_names(
        features: DMatrix<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::SizeMismatch(features.nrows(), labels.len()));
        }
        if labels.is_empty() {
            return Err(Error::EmptyClass("<all>".into()));
        }
        let n_classes = class_names.len();
        let mut n_per_class = vec![0usize; n_classes];
        for &l in &labels {
            if l >= n_classes {
                return Err(Error::IndexError {
                    index: l,
                    classes: n_classes,
                });
            }
            n_per_class[l] += 1;
        }
        if let Some(c) = n_per_class.iter().position(|&k| k == 0) {
            return Err(Error::EmptyClass(class_names[c].clone()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        Ok(Self {
            features,
            labels,
            n_per_class,
            class_names,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_per_class.len()
    }

    /// One-hot label matrix `Y` (n×C).
    pub fn one_hot(&self) -> DMatrix<f64> {
        one_hot(&self.labels, self.n_classes())
    }

    /// Rows selected by `idx`, in that order. Class indices and names are kept,
    /// so a subset may miss classes only if the caller picks such rows; that
    /// case is rejected.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let features = self.features.select_rows(idx.iter());
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        Self::with_names(features, labels, self.class_names.clone())
    }
}

/// One-hot encode labels in `0..n_classes`.
pub fn one_hot(labels: &[usize], n_classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), n_classes, |i, c| {
        if labels[i] == c {
            1.0
        } else {
            0.0
        }
    })
}

/// Which CSV column carries the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl LabelColumn {
    /// Numeric strings are read as a 0-based index, anything else as a name.
    pub fn parse(s: &str) -> Self {
        s.parse::<usize>()
            .map(LabelColumn::Index)
            .unwrap_or_else(|_| LabelColumn::Name(s.to_string()))
    }
}

/// Load a headed, comma-separated file. Labels are re-encoded densely in order
/// of first appearance; every other column must parse as a finite real.
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<DataSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label_column)
}

/// Parse CSV text; see [`load_csv`].
pub fn parse_csv(text: &str, label_column: &LabelColumn) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            col: 0,
            msg: e.to_string(),
        })?
        .clone();
    let n_cols = headers.len();
    let label_idx = match label_column {
        LabelColumn::Last if n_cols > 0 => n_cols - 1,
        LabelColumn::Index(i) if *i < n_cols => *i,
        LabelColumn::Last => {
            return Err(Error::Parse {
                row: 0,
                col: 0,
                msg: "no columns".into(),
            })
        }
        LabelColumn::Index(i) => {
            return Err(Error::Parse {
                row: 0,
                col: *i,
                msg: format!("label column {i} out of range ({n_cols} columns)"),
            })
        }
        LabelColumn::Name(name) => {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse {
                    row: 0,
                    col: 0,
                    msg: format!("no column named {name:?}"),
                })?
        }
    };

    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        if record.len() != n_cols {
            return Err(Error::Parse {
                row,
                col: record.len(),
                msg: format!("expected {n_cols} cells, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                let next = class_names.len();
                let id = *class_index.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                labels.push(id);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    col: c,
                    msg: format!("{cell:?} is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        col: c,
                        msg: format!("{cell:?} is not finite"),
                    });
                }
                values.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyClass("<no data rows>".into()));
    }
    let d = n_cols - 1;
    let features = DMatrix::from_row_slice(labels.len(), d, &values);
    DataSet::with_names(features, labels, class_names)
}

/// Serialize with a `f0..f{d-1},label` header, 17 significant digits per value.
pub fn to_csv_string(ds: &DataSet) -> String {
    let mut out = String::new();
    for j in 0..ds.d() {
        out.push_str(&format!("f{j},"));
    }
    out.push_str("label\n");
    for i in 0..ds.n() {
        for j in 0..ds.d() {
            out.push_str(&fmt_f64(ds.features[(i, j)]));
            out.push(',');
        }
        out.push_str(&ds.class_names[ds.labels[i]]);
        out.push('\n');
    }
    out
}

pub fn write_csv(ds: &DataSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))
}

/// Per-feature affine transform fitted by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant feature.
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fit on the rows of `x`. Requires at least two rows.
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "standardize needs at least 2 rows, got {n}"
            )));
        }
        let nf = n as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / nf;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
            let s = var.sqrt();
            mean.push(m);
            // relative test so large-magnitude constant columns count as constant
            let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            std.push(if s <= 1e-12 * scale.max(1e-300) || s == 0.0 { 0.0 } else { s });
        }
        Ok(Self { mean, std })
    }

    /// `(x − mean) / std`, with constant features mapped to 0.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimMismatch {
                expected: self.mean.len(),
                got: x.ncols(),
            });
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            if self.std[j] == 0.0 {
                0.0
            } else {
                (x[(i, j)] - self.mean[j]) / self.std[j]
            }
        }))
    }
}

/// Center every feature to mean 0 and scale to unit population std.
pub fn standardize(ds: &DataSet) -> Result<(DataSet, Standardizer)> {
    let t = Standardizer::fit(&ds.features)?;
    let features = t.apply(&ds.features)?;
    let out = DataSet {
        features,
        ..ds.clone()
    };
    Ok((out, t))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian features with balanced random binary labels.
pub fn gen_random(n: usize, d: usize, seed: u64) -> Result<DataSet> {
    if n == 0 || n % 2 != 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "gen_random needs even n > 0 and d >= 1 (n={n}, d={d})"
        )));
    }
    let mut rng = rng(seed);
    let features = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    labels.shuffle(&mut rng);
    DataSet::new(features, labels)
}

/// Uniform points in the unit square (class 0) and noisy copies of them
/// (class 1), so cross-class neighbours are much closer than same-class ones.
pub fn gen_adversarial(n_pairs: usize, noise: f64, seed: u64) -> Result<DataSet> {
    if n_pairs == 0 || noise < 0.0 || !noise.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gen_adversarial needs n_pairs >= 1 and noise >= 0 (n_pairs={n_pairs}, noise={noise})"
        )));
    }
    let mut rng = rng(seed);
    let base: Vec<[f64; 2]> = (0..n_pairs)
        .map(|_| [rng.gen::<f64>(), rng.gen::<f64>()])
        .collect();
    let mut rows = Vec::with_capacity(4 * n_pairs);
    for p in &base {
        rows.extend_from_slice(p);
    }
    for p in &base {
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        rows.push(p[0] + noise * e0);
        rows.push(p[1] + noise * e1);
    }
    let features = DMatrix::from_row_slice(2 * n_pairs, 2, &rows);
    let labels = (0..2 * n_pairs).map(|i| usize::from(i >= n_pairs)).collect();
    DataSet::new(features, labels)
}

/// Default noise level for [`gen_adversarial`].
pub const ADVERSARIAL_NOISE: f64 = 0.01;

/// Three interleaved spiral arms: class `c` at radius `t` and angle
/// `2t + 2πc/3`, `t ~ U[0.5, 3]`, plus isotropic Gaussian noise.
pub fn gen_spiral(n_per_class: usize, noise: f64, seed: u64) -> Result<DataSet> {
    if n_per_class < 10 || noise < 0.0 || !noise.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gen_spiral needs n_per_class >= 10 and noise >= 0 (got {n_per_class}, {noise})"
        )));
    }
    let mut rng = rng(seed);
    let mut rows = Vec::with_capacity(6 * n_per_class);
    let mut labels = Vec::with_capacity(3 * n_per_class);
    for c in 0..3 {
        for _ in 0..n_per_class {
            let t = rng.gen_range(0.5..3.0);
            let angle = 2.0 * t + 2.0 * PI * c as f64 / 3.0;
            let e0: f64 = rng.sample(StandardNormal);
            let e1: f64 = rng.sample(StandardNormal);
            rows.push(t * angle.cos() + noise * e0);
            rows.push(t * angle.sin() + noise * e1);
            labels.push(c);
        }
    }
    let features = DMatrix::from_row_slice(3 * n_per_class, 2, &rows);
    DataSet::new(features, labels)
}

/// Stratified fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` sample indices for fold `fold`, each ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    /// Count of samples of each class in each fold: `counts[fold][class]`.
    pub fn class_counts(&self, labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; n_classes]; self.k];
        for (i, &f) in self.assignment.iter().enumerate() {
            counts[f][labels[i]] += 1;
        }
        counts
    }
}

/// Stratified k-fold assignment. Each class is shuffled and dealt round-robin,
/// with the dealing position carried across classes so fold sizes stay
/// balanced too.
pub fn make_folds(ds: &DataSet, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    if let Some((c, &count)) = ds.n_per_class.iter().enumerate().find(|(_, &n)| n < k) {
        return Err(Error::TooFewSamples {
            class: c,
            count,
            needed: k,
        });
    }
    let mut rng = rng(seed);
    let mut assignment = vec![0usize; ds.n()];
    let mut slot = 0usize;
    for c in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..ds.n()).filter(|&i| ds.labels[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = slot % k;
            slot += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
    })
}

/// Column means of the rows of `x` belonging to each class.
pub fn class_means(x: &DMatrix<f64>, labels: &[usize], n_classes: usize) -> DMatrix<f64> {
    let mut sums = DMatrix::zeros(n_classes, x.ncols());
    let mut counts = vec![0usize; n_classes];
    for (i, &c) in labels.iter().enumerate() {
        let mut row = sums.row_mut(c);
        row += x.row(i);
        counts[c] += 1;
    }
    for (c, &k) in counts.iter().enumerate() {
        if k > 0 {
            let mut row = sums.row_mut(c);
            row /= k as f64;
        }
    }
    sums
}

/// Label histogram as a vector.
pub fn histogram(labels: &[usize], n_classes: usize) -> DVector<f64> {
    let mut h = DVector::zeros(n_classes);
    for &l in labels {
        h[l] += 1.0;
    }
    h
}
