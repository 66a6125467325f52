//! Evaluation metrics over kernels and representations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelkit::gaussian_from_sq_dists;
use crate::linalg::{double_center, pairwise_sq_dists};

/// A metric value with a flag for degenerate inputs (zero denominators).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

impl Score {
    fn ok(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    fn flagged(value: f64) -> Self {
        Self {
            value,
            degenerate: true,
        }
    }
}

/// Stand-in for an infinite ratio.
pub const RATIO_CAP: f64 = 1e300;

const DEGENERATE_EPS: f64 = 1e-18;

/// Normalized HSIC in `[0, 1]` for PSD inputs:
/// `Tr(HK_fHK_Y) / √(Tr(HK_fHK_f) · Tr(HK_YHK_Y))`.
pub fn hsic_star(kf: &DMatrix<f64>, ky: &DMatrix<f64>) -> Result<Score> {
    if kf.shape() != ky.shape() {
        return Err(Error::SizeMismatch(kf.nrows(), ky.nrows()));
    }
    let cf = double_center(kf);
    let cy = double_center(ky);
    let ff = cf.norm_squared();
    let yy = cy.norm_squared();
    if ff < DEGENERATE_EPS || yy < DEGENERATE_EPS {
        return Ok(Score::flagged(0.0));
    }
    let fy = cf.component_mul(&cy).sum();
    Ok(Score::ok(fy / (ff * yy).sqrt()))
}

fn check_labels(n: usize, labels: &[usize]) -> Result<()> {
    if n != labels.len() {
        Err(Error::SizeMismatch(n, labels.len()))
    } else {
        Ok(())
    }
}

/// Cross-class over same-class inner-product mass, over pairs `i < j`.
pub fn csr(f: &DMatrix<f64>, labels: &[usize]) -> Result<Score> {
    check_labels(f.nrows(), labels)?;
    let g = f * f.transpose();
    let (mut same, mut cross) = (0.0, 0.0);
    let mut any_same = false;
    for j in 0..labels.len() {
        for i in 0..j {
            if labels[i] == labels[j] {
                same += g[(i, j)];
                any_same = true;
            } else {
                cross += g[(i, j)];
            }
        }
    }
    if !any_same {
        return Err(Error::InvalidParameter("CSR needs at least one same-class pair".into()));
    }
    if same.abs() < DEGENERATE_EPS {
        return Ok(Score::flagged(if cross == 0.0 { 0.0 } else { RATIO_CAP }));
    }
    Ok(Score::ok(cross / same))
}

/// `Tr(S_w) / Tr(S_b)` with both traces summing `‖Wᵀ(rᵢ − rⱼ)‖² / 2σ²` over
/// same-class and cross-class pairs respectively.
pub fn scatter_ratio(r: &DMatrix<f64>, w: &DMatrix<f64>, sigma: f64, labels: &[usize]) -> Result<Score> {
    check_labels(r.nrows(), labels)?;
    if w.nrows() != r.ncols() {
        return Err(Error::DimMismatch {
            expected: r.ncols(),
            got: w.nrows(),
        });
    }
    let d2 = pairwise_sq_dists(&(r * w));
    let c = 1.0 / (2.0 * sigma * sigma);
    let (mut within, mut between) = (0.0, 0.0);
    for j in 0..labels.len() {
        for i in 0..j {
            if labels[i] == labels[j] {
                within += d2[(i, j)] * c;
            } else {
                between += d2[(i, j)] * c;
            }
        }
    }
    if between <= 0.0 {
        return Ok(Score::flagged(if within == 0.0 { 0.0 } else { RATIO_CAP }));
    }
    Ok(Score::ok(within / between))
}

/// Smallest same-class entry minus largest cross-class entry, over `i < j`.
/// An empty side counts as 1 (same-class) or 0 (cross-class).
pub fn block_gap(k: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    check_labels(k.nrows(), labels)?;
    let mut min_same = f64::INFINITY;
    let mut max_cross = f64::NEG_INFINITY;
    for j in 0..labels.len() {
        for i in 0..j {
            let v = k[(i, j)];
            if labels[i] == labels[j] {
                min_same = min_same.min(v);
            } else {
                max_cross = max_cross.max(v);
            }
        }
    }
    let min_same = if min_same.is_finite() { min_same } else { 1.0 };
    let max_cross = if max_cross.is_finite() { max_cross } else { 0.0 };
    Ok(min_same - max_cross)
}

/// Mean silhouette with Euclidean distance.
pub fn silhouette(f: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    check_labels(f.nrows(), labels)?;
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; c];
    for &l in labels {
        counts[l] += 1;
    }
    if c < 2 {
        return Err(Error::SingleClass);
    }
    if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &k)| k < 2) {
        return Err(Error::TooFewSamples {
            class,
            count,
            needed: 2,
        });
    }
    let d = pairwise_sq_dists(f).map(f64::sqrt);
    let n = labels.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; c];
        for j in 0..n {
            sums[labels[j]] += d[(i, j)];
        }
        let own = labels[i];
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..c)
            .filter(|&k| k != own)
            .map(|k| sums[k] / counts[k] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Per-sample penalty terms and the residual of the trace identity
/// `Tr(WᵀRᵀ(Γ̂ − D_Γ̂)RW) = Σᵢⱼ Γ̂ᵢⱼ⟨Wᵀrᵢ, Wᵀrⱼ⟩ − Σᵢ Dᵢ‖Wᵀrᵢ‖²`
/// with `Γ̂ = Γ ⊙ K_{RW} / σ²`.
#[derive(Debug, Clone)]
pub struct PenaltyTerms {
    pub d: Vec<f64>,
    /// Left side, through the matrix form.
    pub trace_form: f64,
    /// Right side, through explicit pair sums with the class-split `Dᵢ`.
    pub pair_form: f64,
    /// `|trace_form − pair_form|`.
    pub residual: f64,
    /// Magnitude reference for a relative residual.
    pub scale: f64,
}

impl PenaltyTerms {
    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }

    pub fn mean_d(&self) -> f64 {
        self.d.iter().sum::<f64>() / self.d.len().max(1) as f64
    }
}

pub fn penalty_terms(
    r: &DMatrix<f64>,
    w: &DMatrix<f64>,
    sigma: f64,
    gamma: &DMatrix<f64>,
    labels: &[usize],
) -> Result<PenaltyTerms> {
    check_labels(r.nrows(), labels)?;
    if gamma.shape() != (r.nrows(), r.nrows()) {
        return Err(Error::SizeMismatch(gamma.nrows(), r.nrows()));
    }
    if w.nrows() != r.ncols() {
        return Err(Error::DimMismatch {
            expected: r.ncols(),
            got: w.nrows(),
        });
    }
    let n = r.nrows();
    let z = r * w;
    let k = gaussian_from_sq_dists(&pairwise_sq_dists(&z), sigma);
    let s2 = sigma * sigma;
    let gamma_hat = gamma.component_mul(&k) / s2;

    let mut lap = -gamma_hat.clone();
    for i in 0..n {
        lap[(i, i)] += gamma_hat.row(i).sum();
    }
    let trace_form = -(z.transpose() * lap * &z).trace();

    let d: Vec<f64> = (0..n)
        .map(|i| {
            let mut same = 0.0;
            let mut cross = 0.0;
            for j in 0..n {
                if labels[i] == labels[j] {
                    same += gamma[(i, j)] * k[(i, j)];
                } else {
                    cross += gamma[(i, j)].abs() * k[(i, j)];
                }
            }
            (same - cross) / s2
        })
        .collect();
    let gram = &z * z.transpose();
    let mut pair_form = 0.0;
    let mut scale = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t = gamma_hat[(i, j)] * gram[(i, j)];
            pair_form += t;
            scale += t.abs();
        }
        let t = d[i] * gram[(i, i)];
        pair_form -= t;
        scale += t.abs();
    }
    Ok(PenaltyTerms {
        residual: (trace_form - pair_form).abs(),
        d,
        trace_form,
        pair_form,
        scale,
    })
}

/// Per-layer trend metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerMetrics {
    pub hsic_star: f64,
    pub scatter_ratio: f64,
    pub block_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hsic_star: f64,
    pub csr: f64,
    pub scatter_ratio: f64,
    pub silhouette: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub per_layer: Vec<LayerMetrics>,
}

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelkit::{gamma_from_labels, label_gram, GammaMode};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn hsic_star_of_label_kernel_is_one() {
        let labels = [0, 0, 1, 1, 2, 2, 2];
        let ky = label_gram(&labels);
        let s = hsic_star(&ky, &ky).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12 && !s.degenerate);
    }

    #[test]
    fn hsic_star_constant_kernel_flagged() {
        let ky = label_gram(&[0, 1, 0, 1]);
        let s = hsic_star(&DMatrix::from_element(4, 4, 1.0), &ky).unwrap();
        assert!(s.degenerate && s.value == 0.0);
    }

    #[test]
    fn hsic_star_null_features() {
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let x = random(n, 2, 4);
        let kf = x.clone() * x.transpose();
        let s = hsic_star(&kf, &label_gram(&labels)).unwrap();
        assert!(s.value.abs() <= 0.15, "{}", s.value);
    }

    #[test]
    fn csr_examples() {
        let labels = [0, 0, 1, 1];
        let onehot = DMatrix::from_fn(4, 2, |i, j| f64::from(u8::from(labels[i] == j)));
        assert_eq!(csr(&onehot, &labels).unwrap().value, 0.0);
        let same = DMatrix::from_element(4, 3, 0.5);
        assert!((csr(&same, &labels).unwrap().value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scatter_collapsed_classes() {
        let r = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 3.0, 3.0]);
        let w = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(scatter_ratio(&r, &w, 1.0, &[0, 0, 1, 1]).unwrap().value, 0.0);
    }

    #[test]
    fn scatter_matches_pair_sums() {
        let w = DMatrix::from_element(1, 1, 1.0);
        let r = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(scatter_ratio(&r, &w, 1.0, &[0, 1]).unwrap().degenerate);
        let r = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
        let a = scatter_ratio(&r, &w, 1.0, &[0, 0, 1]).unwrap().value;
        let b = scatter_ratio(&r, &w, 1.0, &[0, 1, 1]).unwrap().value;
        // same: {0,1}=1 vs {1,2}=4; cross: {0,2}+{1,2}=13 vs {0,1}+{0,2}=10
        assert!((a - 1.0 / 13.0).abs() < 1e-15);
        assert!((b - 4.0 / 10.0).abs() < 1e-15);
    }

    #[test]
    fn block_gap_examples() {
        let labels = [0, 0, 1, 1];
        assert_eq!(block_gap(&label_gram(&labels), &labels).unwrap(), 1.0);
        assert_eq!(block_gap(&DMatrix::from_element(4, 4, 1.0), &labels).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let blobs = DMatrix::from_fn(40, 2, |i, _| {
            let e: f64 = rng.sample(StandardNormal);
            (if i < 20 { 0.0 } else { 50.0 }) + 0.1 * e
        });
        let labels: Vec<usize> = (0..40).map(|i| i / 20).collect();
        assert!(silhouette(&blobs, &labels).unwrap() >= 0.95);
        assert_eq!(silhouette(&DMatrix::zeros(6, 2), &[0, 0, 0, 1, 1, 1]).unwrap(), 0.0);
        let one_blob = random(100, 2, 10);
        let rl: Vec<usize> = (0..100).map(|_| rng.gen_range(0..2)).collect();
        assert!(silhouette(&one_blob, &rl).unwrap() <= 0.1);
        assert!(matches!(
            silhouette(&DMatrix::zeros(3, 1), &[0, 0, 1]),
            Err(Error::TooFewSamples { class: 1, .. })
        ));
    }

    #[test]
    fn penalty_zero_gamma() {
        let r = random(6, 3, 1);
        let w = DMatrix::from_fn(3, 2, |i, j| f64::from(u8::from(i == j)));
        let g = DMatrix::zeros(6, 6);
        let p = penalty_terms(&r, &w, 1.0, &g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!(p.d.iter().all(|&v| v == 0.0));
        assert_eq!(p.residual, 0.0);
    }

    #[test]
    fn penalty_random_small_instance() {
        let labels = [0, 0, 0, 1, 1, 1];
        let r = random(6, 3, 2);
        let w = random(3, 2, 3).qr().q();
        let g = gamma_from_labels(&labels, GammaMode::Centered).unwrap();
        let p = penalty_terms(&r, &w, 0.9, &g.values, &labels).unwrap();
        assert!(p.residual <= 1e-10, "{}", p.residual);
    }

    #[test]
    fn accuracy_counts() {
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]), 0.75);
    }

    proptest! {
        #[test]
        fn hsic_star_symmetric_and_scale_free(seed in 0u64..1000, c in 0.01f64..100.0) {
            let x = random(12, 2, seed);
            let kf = crate::kernelkit::gaussian_gram(&x, 1.0).unwrap().values;
            let labels: Vec<usize> = (0..12).map(|i| (i * 7 + seed as usize) % 3).collect();
            let ky = label_gram(&labels);
            let ab = hsic_star(&kf, &ky).unwrap().value;
            let ba = hsic_star(&ky, &kf).unwrap().value;
            let scaled = hsic_star(&(&kf * c), &ky).unwrap().value;
            prop_assert!((ab - ba).abs() <= 1e-10);
            prop_assert!((ab - scaled).abs() <= 1e-10);
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&ab));
        }

        #[test]
        fn penalty_identity_holds(seed in 0u64..10_000, n in 4usize..30, sigma in 0.3f64..3.0) {
            let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let r = random(n, 4, seed);
            let w = random(4, 2, seed + 1).qr().q();
            let g = gamma_from_labels(&labels, GammaMode::Centered).unwrap();
            let p = penalty_terms(&r, &w, sigma, &g.values, &labels).unwrap();
            prop_assert!(p.relative_residual() <= 1e-9);
        }
    }
}
