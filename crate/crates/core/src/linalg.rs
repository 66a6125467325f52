//! Dense helpers shared by the solvers: sorted symmetric eigendecomposition,
//! pairwise distances and row-major matrix text I/O.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
///
/// The input is symmetrized as `(A + Aᵀ)/2` first. Ties keep the solver's
/// index order so results are deterministic.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> Result<SortedEigen> {
    if a.nrows() != a.ncols() {
        return Err(Error::SizeMismatch(a.nrows(), a.ncols()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigen input"));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(SortedEigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(symmetrized(a));
    let (s, u) = (&eig.eigenvalues, &eig.eigenvectors);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| s[i]));
    let vectors = DMatrix::from_fn(n, n, |i, k| u[(i, order[k])]);
    Ok(SortedEigen { values, vectors })
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrized(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Flip each column so that its largest-magnitude entry is positive.
/// Ties are broken by the lowest row index.
pub fn normalize_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if best_abs > 0.0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Squared Euclidean distances between all rows of `z`.
pub fn pairwise_sq_dists(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    let norms: Vec<f64> = (0..n).map(|i| z.row(i).norm_squared()).collect();
    let gram = z * z.transpose();
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                d[(i, j)] = (norms[i] + norms[j] - 2.0 * gram[(i, j)]).max(0.0);
            }
        }
    }
    // exact symmetry
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (d[(i, j)] + d[(j, i)]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Median Euclidean distance over all unordered pairs of distinct rows.
/// Returns 0 for fewer than two rows.
pub fn median_pairwise_distance(z: &DMatrix<f64>) -> f64 {
    let n = z.nrows();
    if n < 2 {
        return 0.0;
    }
    let d2 = pairwise_sq_dists(z);
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for i in (j + 1)..n {
            dists.push(d2[(i, j)].sqrt());
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    let k = dists.len();
    if k % 2 == 1 {
        dists[k / 2]
    } else {
        0.5 * (dists[k / 2 - 1] + dists[k / 2])
    }
}

/// Centered copy `H K H` with `H = I − 11ᵀ/n`, computed from row, column and
/// grand means.
pub fn double_center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    if n == 0 {
        return k.clone();
    }
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// `Diag(A 1)`: the degree matrix of `a`.
pub fn degree_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = a.row(i).sum();
    }
    d
}

/// `A − Diag(A 1)`, the negated graph Laplacian.
pub fn minus_laplacian(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut sums = vec![0.0; a.nrows()];
    for col in a.column_iter() {
        for (s, v) in sums.iter_mut().zip(col.iter()) {
            *s += v;
        }
    }
    let mut out = a.clone();
    for (i, s) in sums.into_iter().enumerate() {
        out[(i, i)] -= s;
    }
    out
}

/// Maximum absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Format a float with 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a matrix as comma-separated rows, 17 significant digits per value.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_to_csv(m)).map_err(|e| Error::io(path, e))
}

/// Row-major CSV text for `m` (no header).
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 24);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Parse the output of [`matrix_to_csv`].
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(c, cell)| {
                cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                    row: r,
                    col: c,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    row: r,
                    col: row.len(),
                    msg: format!("expected {} columns", first.len()),
                });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Read a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    matrix_from_csv(&text)
}
