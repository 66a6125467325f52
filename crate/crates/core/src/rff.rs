//! Random Fourier features for the Gaussian kernel:
//! `φ(z) = √(2/m) · cos(Ωᵀz + b)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct RffMap {
    /// `q × m` frequencies, one column per feature.
    pub omega: DMatrix<f64>,
    /// Phases in `[0, 2π)`.
    pub bias: DVector<f64>,
    pub sigma: f64,
    pub seed: u64,
}

impl RffMap {
    pub fn input_dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn width(&self) -> usize {
        self.omega.ncols()
    }

    /// Map each row of `z` to its feature vector.
    pub fn apply(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                got: z.ncols(),
            });
        }
        let scale = (2.0 / self.width() as f64).sqrt();
        let mut out = z * &self.omega;
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let b = self.bias[j];
            col.apply(|v| *v = scale * (*v + b).cos());
        }
        Ok(out)
    }
}

/// Draw `Ω` with i.i.d. `N(0, σ⁻²)` entries and `b ~ U[0, 2π)`.
pub fn sample_rff(q: usize, sigma: f64, m: usize, seed: u64) -> Result<RffMap> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "RFF bandwidth must be positive, got {sigma}"
        )));
    }
    if m == 0 || q == 0 {
        return Err(Error::InvalidParameter(format!(
            "RFF needs q >= 1 and m >= 1 (q={q}, m={m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(q, m, |_, _| rng.sample::<f64, _>(StandardNormal) / sigma);
    let bias = DVector::from_fn(m, |_, _| rng.gen_range(0.0..TAU));
    Ok(RffMap {
        omega,
        bias,
        sigma,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(n: usize, q: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, q, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.7)
    }

    fn mean_kernel_error(m: usize, pairs: &(DMatrix<f64>, DMatrix<f64>), sigma: f64) -> f64 {
        let map = sample_rff(pairs.0.ncols(), sigma, m, 17).unwrap();
        let fu = map.apply(&pairs.0).unwrap();
        let fv = map.apply(&pairs.1).unwrap();
        let n = pairs.0.nrows();
        (0..n)
            .map(|i| {
                let approx = fu.row(i).dot(&fv.row(i));
                let d2 = (pairs.0.row(i) - pairs.1.row(i)).norm_squared();
                (approx - (-d2 / (2.0 * sigma * sigma)).exp()).abs()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn deterministic() {
        assert_eq!(sample_rff(3, 0.5, 50, 9).unwrap(), sample_rff(3, 0.5, 50, 9).unwrap());
    }

    #[test]
    fn frequency_moments() {
        let (q, m, sigma) = (4, 300, 0.5);
        let map = sample_rff(q, sigma, m, 1).unwrap();
        let k = (q * m) as f64;
        let mean = map.omega.sum() / k;
        assert!(mean.abs() <= 3.0 / k.sqrt() / sigma);
        let var = map.omega.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let target = 1.0 / (sigma * sigma);
        assert!((var - target).abs() <= 0.2 * target);
        assert!(map.bias.iter().all(|&b| (0.0..TAU).contains(&b)));
    }

    #[test]
    fn entries_bounded_and_self_products() {
        let map = sample_rff(2, 1.0, 300, 3).unwrap();
        let z = points(100, 2, 4);
        let f = map.apply(&z).unwrap();
        let bound = (2.0f64 / 300.0).sqrt();
        assert!(f.iter().all(|v| v.abs() <= bound + 1e-15));
        let norms: Vec<f64> = (0..100).map(|i| f.row(i).norm_squared()).collect();
        assert!(norms.iter().all(|&s| (0.0..=2.0).contains(&s)));
        let mean = norms.iter().sum::<f64>() / 100.0;
        assert!((mean - 1.0).abs() <= 0.1);
    }

    #[test]
    fn approximates_gaussian_kernel() {
        let pairs = (points(500, 2, 5), points(500, 2, 6));
        assert!(mean_kernel_error(300, &pairs, 1.0) <= 0.05);
    }

    #[test]
    fn error_shrinks_with_width() {
        let pairs = (points(500, 2, 7), points(500, 2, 8));
        let e: Vec<f64> = [75, 300, 1200]
            .iter()
            .map(|&m| mean_kernel_error(m, &pairs, 1.0))
            .collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    }

    #[test]
    fn dim_mismatch() {
        let map = sample_rff(2, 1.0, 10, 0).unwrap();
        assert!(matches!(
            map.apply(&DMatrix::zeros(3, 3)),
            Err(Error::DimMismatch { expected: 2, got: 3 })
        ));
    }
}
