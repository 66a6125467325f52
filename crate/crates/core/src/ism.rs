//! Iterative spectral method for `max_W Tr(Γ K_{RW})` subject to `WᵀW = I`
//! with a Gaussian kernel.
//!
//! Each iteration forms `Q = Rᵀ(Γ̂ − Diag(Γ̂1))R` with `Γ̂ = Γ ⊙ K_{RW}(σ)` and
//! keeps the eigenvectors of its largest positive eigenvalues. The width `q`
//! is recomputed from every spectrum.
//!
//! [`IsmProblem`] factors `R` once so that repeated solves (one per bandwidth
//! candidate) work in the row space of `R`, whose dimension is at most `n`.
//! Directions of `R`'s null space only ever contribute zero eigenvalues and
//! never enter the result.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelkit::{gaussian_from_sq_dists, GammaMatrix};
use crate::linalg::{
    minus_laplacian, normalize_column_signs, pairwise_sq_dists, sym_eigen_desc, symmetrized,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsmConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub rank_tol: f64,
    pub q_override: Option<usize>,
}

impl Default for IsmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iters: 50,
            rank_tol: 1e-5,
            q_override: None,
        }
    }
}

impl IsmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.rank_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "ISM tol and rank_tol must be positive".into(),
            ));
        }
        if self.q_override == Some(0) {
            return Err(Error::InvalidParameter("q_override must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IsmResult {
    /// `m × q`, orthonormal columns.
    pub w: DMatrix<f64>,
    /// Eigenvalues belonging to the columns of `w`, descending.
    pub eigenvalues: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    /// `Tr(Γ K_{RW}(σ))` at the returned `W`.
    pub objective: f64,
    /// True when no eigenvalue was positive and the top vector was kept anyway.
    pub width_fallback: bool,
    /// Objective after initialization and after every update.
    pub objective_trace: Vec<f64>,
}

impl IsmResult {
    pub fn q(&self) -> usize {
        self.w.ncols()
    }
}

/// `Q₀ = Rᵀ(Γ − Diag(Γ1))R`.
pub fn init_q(r: &DMatrix<f64>, gamma: &GammaMatrix) -> Result<DMatrix<f64>> {
    check_shapes(r, gamma)?;
    Ok(symmetrized(
        &(r.transpose() * minus_laplacian(&gamma.values) * r),
    ))
}

/// `Q = Rᵀ(Γ̂ − Diag(Γ̂1))R` with `Γ̂ = Γ ⊙ K_{RW}(σ)`.
pub fn update_q(
    r: &DMatrix<f64>,
    gamma: &GammaMatrix,
    w: &DMatrix<f64>,
    sigma: f64,
) -> Result<DMatrix<f64>> {
    check_shapes(r, gamma)?;
    check_sigma(sigma)?;
    if w.nrows() != r.ncols() {
        return Err(Error::DimMismatch {
            expected: r.ncols(),
            got: w.nrows(),
        });
    }
    let gamma_hat = weighted_gamma(&(r * w), &gamma.values, sigma);
    Ok(symmetrized(&(r.transpose() * minus_laplacian(&gamma_hat) * r)))
}

/// Width from a descending spectrum: the count of eigenvalues that are
/// positive and above `rank_tol · max(λ₁, 0)`. Returns `(q, fallback)`, where
/// `fallback` marks that nothing qualified and `q = 1` was forced.
pub fn select_width(eigenvalues: &[f64], rank_tol: f64) -> (usize, bool) {
    let Some(&top) = eigenvalues.first() else {
        return (1, true);
    };
    let cut = rank_tol * top.max(0.0);
    let q = eigenvalues.iter().filter(|&&l| l > 0.0 && l > cut).count();
    if q == 0 {
        (1, true)
    } else {
        (q, false)
    }
}

/// `Tr(Γ K_{Z}(σ))` for projected samples `Z = RW`.
pub fn objective(z: &DMatrix<f64>, gamma: &DMatrix<f64>, sigma: f64) -> f64 {
    let k = gaussian_from_sq_dists(&pairwise_sq_dists(z), sigma);
    gamma.component_mul(&k).sum()
}

fn projected_kernel(r: &DMatrix<f64>, w: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    gaussian_from_sq_dists(&pairwise_sq_dists(&(r * w)), sigma)
}

fn weighted_gamma(z: &DMatrix<f64>, gamma: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    gamma.component_mul(&gaussian_from_sq_dists(&pairwise_sq_dists(z), sigma))
}

fn check_shapes(r: &DMatrix<f64>, gamma: &GammaMatrix) -> Result<()> {
    if gamma.values.nrows() != r.nrows() {
        return Err(Error::SizeMismatch(gamma.values.nrows(), r.nrows()));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ISM input R"));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {sigma}"
        )))
    }
}

/// Relative change between consecutive spectra; the shorter is zero-padded.
fn spectrum_change(prev: &[f64], cur: &[f64]) -> f64 {
    let len = prev.len().max(cur.len());
    let at = |s: &[f64], i: usize| s.get(i).copied().unwrap_or(0.0);
    let diff: f64 = (0..len).map(|i| (at(cur, i) - at(prev, i)).powi(2)).sum();
    let norm: f64 = cur.iter().map(|v| v * v).sum();
    if norm == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (diff / norm).sqrt()
    }
}

/// Singular values below this fraction of the largest are treated as zero.
/// Their share of `Q` scales with the square, far below working precision.
const RANK_CUTOFF: f64 = 1e-8;

/// A layer problem `(R, Γ)` prepared for solves at several bandwidths.
#[derive(Debug, Clone)]
pub struct IsmProblem {
    gamma: DMatrix<f64>,
    /// `R` expressed in an orthonormal basis of its row space (`n × r`).
    reduced: DMatrix<f64>,
    /// Basis vectors as columns (`m × r`); `None` when no reduction happened.
    basis: Option<DMatrix<f64>>,
    m: usize,
}

impl IsmProblem {
    pub fn new(r: &DMatrix<f64>, gamma: &GammaMatrix) -> Result<Self> {
        check_shapes(r, gamma)?;
        if r.nrows() < 2 {
            return Err(Error::InvalidParameter(format!(
                "ISM needs n >= 2, got {}",
                r.nrows()
            )));
        }
        let m = r.ncols();
        let svd = r.clone().svd(true, true);
        let u = svd.u.ok_or_else(|| Error::EigenFailure("SVD without U".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::EigenFailure("SVD without Vᵀ".into()))?;
        let s = &svd.singular_values;
        let s_max = s.max();
        let keep: Vec<usize> = (0..s.len())
            .filter(|&i| s_max > 0.0 && s[i] > RANK_CUTOFF * s_max)
            .collect();
        let (reduced, basis) = if keep.len() == m {
            (r.clone(), None)
        } else if keep.is_empty() {
            // R = 0: any unit direction is optimal; keep one coordinate axis
            (DMatrix::zeros(r.nrows(), 1), Some(DMatrix::from_fn(m, 1, |i, _| f64::from(u8::from(i == 0)))))
        } else {
            let reduced = DMatrix::from_fn(r.nrows(), keep.len(), |i, k| u[(i, keep[k])] * s[keep[k]]);
            let basis = DMatrix::from_fn(m, keep.len(), |j, k| v_t[(keep[k], j)]);
            (reduced, Some(basis))
        };
        Ok(Self {
            gamma: gamma.values.clone(),
            reduced,
            basis,
            m,
        })
    }

    /// Dimension of the working basis.
    pub fn rank(&self) -> usize {
        self.reduced.ncols()
    }

    fn q_of(&self, gamma_like: &DMatrix<f64>) -> DMatrix<f64> {
        let rt = self.reduced.transpose();
        symmetrized(&(&rt * minus_laplacian(gamma_like) * &self.reduced))
    }

    fn top_vectors(&self, q_mat: &DMatrix<f64>, cfg: &IsmConfig) -> Result<(DMatrix<f64>, Vec<f64>, bool)> {
        let eig = sym_eigen_desc(q_mat)?;
        let (q, fallback) = match cfg.q_override {
            Some(q) => (q.min(eig.values.len()).max(1), false),
            None => select_width(eig.values.as_slice(), cfg.rank_tol),
        };
        let w = eig.vectors.columns(0, q).into_owned();
        let values = eig.values.rows(0, q).iter().copied().collect();
        Ok((w, values, fallback))
    }

    fn lift(&self, w_red: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = match &self.basis {
            Some(b) => b * w_red,
            None => w_red.clone(),
        };
        normalize_column_signs(&mut w);
        w
    }

    /// Run the iteration at bandwidth `sigma`.
    pub fn solve(&self, sigma: f64, cfg: &IsmConfig) -> Result<IsmResult> {
        check_sigma(sigma)?;
        cfg.validate()?;
        let q0 = self.q_of(&self.gamma);
        let (mut w_red, mut spectrum, mut fallback) = self.top_vectors(&q0, cfg)?;
        let mut k = projected_kernel(&self.reduced, &w_red, sigma);
        let mut trace = vec![self.gamma.component_mul(&k).sum()];
        let mut iters = 0;
        let mut converged = false;
        while iters < cfg.max_iters {
            let q_mat = self.q_of(&self.gamma.component_mul(&k));
            let (w_next, spec_next, fb) = self.top_vectors(&q_mat, cfg)?;
            iters += 1;
            let change = spectrum_change(&spectrum, &spec_next);
            w_red = w_next;
            spectrum = spec_next;
            fallback = fb;
            k = projected_kernel(&self.reduced, &w_red, sigma);
            let obj = self.gamma.component_mul(&k).sum();
            if let Some(&last) = trace.last() {
                if obj < last - 1e-6 * last.abs().max(1.0) {
                    log::debug!("ISM objective decreased {last} -> {obj} at iteration {iters}");
                }
            }
            trace.push(obj);
            if change < cfg.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            log::debug!("ISM hit max_iters={} at sigma={sigma}", cfg.max_iters);
        }
        let w = self.lift(&w_red);
        debug_assert_eq!(w.nrows(), self.m);
        Ok(IsmResult {
            objective: *trace.last().unwrap_or(&f64::NAN),
            w,
            eigenvalues: spectrum,
            iters,
            converged,
            width_fallback: fallback,
            objective_trace: trace,
        })
    }
}

/// Solve one layer problem at bandwidth `sigma`.
pub fn solve(
    r: &DMatrix<f64>,
    gamma: &GammaMatrix,
    sigma: f64,
    cfg: &IsmConfig,
) -> Result<IsmResult> {
    IsmProblem::new(r, gamma)?.solve(sigma, cfg)
}

/// `Q(W)W − W·Diag(Λ)` measured as a max-abs residual, with `Q` evaluated at
/// the returned `W` itself.
pub fn fixed_point_residual(
    r: &DMatrix<f64>,
    gamma: &GammaMatrix,
    sigma: f64,
    result: &IsmResult,
) -> Result<(f64, f64)> {
    let q = update_q(r, gamma, &result.w, sigma)?;
    let lam = DVector::from_vec(result.eigenvalues.clone());
    let lhs = &q * &result.w;
    let rhs = &result.w * DMatrix::from_diagonal(&lam);
    Ok(((lhs - rhs).amax(), q.amax()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelkit::{gamma_from_labels, GammaMode};
    use crate::linalg::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gamma(labels: &[usize]) -> GammaMatrix {
        gamma_from_labels(labels, GammaMode::Centered).unwrap()
    }

    fn random(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
    }

    fn orthonormality_error(w: &DMatrix<f64>) -> f64 {
        max_abs(&(w.transpose() * w - DMatrix::identity(w.ncols(), w.ncols())))
    }

    #[test]
    fn init_q_two_point() {
        let r = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let q = init_q(&r, &gamma(&[0, 1])).unwrap();
        assert!((q[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn init_q_zero_gamma() {
        let g = gamma(&[0, 0, 0]);
        let q = init_q(&random(3, 2, 1), &g).unwrap();
        assert!(max_abs(&q) < 1e-14);
    }

    #[test]
    fn update_q_wide_bandwidth_matches_init() {
        let r = random(10, 3, 2);
        let g = gamma(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let w = DMatrix::from_fn(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let q = update_q(&r, &g, &w, 1e6).unwrap();
        let q0 = init_q(&r, &g).unwrap();
        assert!(max_abs(&(q - q0)) <= 1e-6);
    }

    #[test]
    fn update_q_matches_pair_sum() {
        let r = random(8, 3, 3);
        let g = gamma(&[0, 0, 1, 1, 1, 2, 2, 0]);
        let w = DMatrix::from_fn(3, 2, |i, j| f64::from(u8::from(i == j)));
        let sigma = 0.8;
        let q = update_q(&r, &g, &w, sigma).unwrap();
        let gh = weighted_gamma(&(&r * &w), &g.values, sigma);
        let mut brute = DMatrix::zeros(3, 3);
        for i in 0..8 {
            for j in 0..8 {
                let d = (r.row(i) - r.row(j)).transpose();
                brute += &d * d.transpose() * gh[(i, j)];
            }
        }
        // Q = −½ Σ Γ̂ᵢⱼ (rᵢ − rⱼ)(rᵢ − rⱼ)ᵀ
        assert!(max_abs(&(q + brute * 0.5)) < 1e-10);
    }

    #[test]
    fn width_rule() {
        assert_eq!(select_width(&[5.0, 3.0, 1e-9], 1e-5), (2, false));
        assert_eq!(select_width(&[5.0, -1.0], 1e-5), (1, false));
        assert_eq!(select_width(&[-0.5, -1.0], 1e-5), (1, true));
    }

    #[test]
    fn two_point_toy() {
        let r = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let g = gamma(&[0, 1]);
        let sigma = 1.3;
        let res = solve(&r, &g, sigma, &IsmConfig::default()).unwrap();
        assert_eq!(res.w.abs()[(0, 0)], 1.0);
        let v = &g.values;
        let expect =
            v[(0, 0)] + v[(1, 1)] - 2.0 * v[(0, 1)].abs() * (-4.0 / (2.0 * sigma * sigma)).exp();
        assert!((res.objective - expect).abs() < 1e-14);
    }

    #[test]
    fn finds_separating_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let labels: Vec<usize> = (0..n).map(|i| i / 20).collect();
        let r = DMatrix::from_fn(n, 2, |i, j| {
            let e: f64 = rng.sample(StandardNormal);
            if j == 0 {
                (if labels[i] == 0 { -1.5 } else { 1.5 }) + 0.2 * e
            } else {
                e
            }
        });
        let g = gamma(&labels);
        let sigma = 1.0;
        let cfg = IsmConfig {
            q_override: Some(1),
            ..IsmConfig::default()
        };
        let res = solve(&r, &g, sigma, &cfg).unwrap();
        // oracle: grid over the half circle
        let (mut best, mut best_angle) = (f64::NEG_INFINITY, 0.0);
        for k in 0..3600 {
            let a = std::f64::consts::PI * k as f64 / 3600.0;
            let w = DMatrix::from_row_slice(2, 1, &[a.cos(), a.sin()]);
            let f = objective(&(&r * &w), &g.values, sigma);
            if f > best {
                best = f;
                best_angle = a;
            }
        }
        let got = res.w[(1, 0)].atan2(res.w[(0, 0)]).rem_euclid(std::f64::consts::PI);
        let diff = (got - best_angle).abs();
        let diff = diff.min(std::f64::consts::PI - diff);
        assert!(diff.to_degrees() < 5.0, "angle off by {}", diff.to_degrees());
        assert!(best_angle.cos().abs() > 0.99);
    }

    #[test]
    fn result_is_orthonormal_and_positive() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let r = random(30, 6, 4);
        let res = solve(&r, &gamma(&labels), 1.5, &IsmConfig::default()).unwrap();
        assert!(orthonormality_error(&res.w) <= 1e-8);
        assert!(res.eigenvalues.iter().all(|&l| l > 0.0));
        assert!(res.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn reduced_basis_matches_full_space() {
        // n < m, so the problem is solved in the row space of R
        let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
        let r = random(12, 20, 5);
        let g = gamma(&labels);
        let cfg = IsmConfig {
            q_override: Some(2),
            tol: 1e-12,
            max_iters: 200,
            ..IsmConfig::default()
        };
        let problem = IsmProblem::new(&r, &g).unwrap();
        assert!(problem.rank() <= 12);
        let res = problem.solve(2.0, &cfg).unwrap();
        let q = update_q(&r, &g, &res.w, 2.0).unwrap();
        let eig = sym_eigen_desc(&q).unwrap();
        for k in 0..2 {
            assert!((eig.values[k] - res.eigenvalues[k]).abs() <= 1e-6 * eig.values[0].abs());
        }
    }

    #[test]
    fn fixed_point_residual_small() {
        let labels: Vec<usize> = (0..24).map(|i| i / 8).collect();
        let r = random(24, 4, 6);
        let g = gamma(&labels);
        let cfg = IsmConfig {
            tol: 1e-12,
            max_iters: 500,
            ..IsmConfig::default()
        };
        let res = solve(&r, &g, 2.0, &cfg).unwrap();
        assert!(res.converged);
        let (resid, scale) = fixed_point_residual(&r, &g, 2.0, &res).unwrap();
        assert!(resid <= 1e-6 * scale, "{resid} vs {scale}");
    }

    #[test]
    fn rotation_invariance_of_objective() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let r = random(20, 3, 7);
        let g = gamma(&labels);
        let u = random(3, 3, 8).qr().q();
        let cfg = IsmConfig {
            tol: 1e-12,
            max_iters: 300,
            ..IsmConfig::default()
        };
        let a = solve(&r, &g, 1.0, &cfg).unwrap();
        let b = solve(&(&r * &u), &g, 1.0, &cfg).unwrap();
        assert!((a.objective - b.objective).abs() <= 1e-8 * a.objective.abs().max(1.0));
    }

    #[test]
    fn spectrum_change_pads() {
        assert_eq!(spectrum_change(&[1.0], &[1.0, 0.0]), 0.0);
        assert!(spectrum_change(&[1.0], &[1.0, 1.0]) > 0.5);
    }

    #[test]
    fn rejects_bad_sigma() {
        let r = random(4, 2, 1);
        assert!(solve(&r, &gamma(&[0, 0, 1, 1]), -1.0, &IsmConfig::default()).is_err());
    }
}
