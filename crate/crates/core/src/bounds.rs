//! Closed-form lower bound on the layer HSIC as a function of the previous
//! layer's bandwidth `σ₀` (through `ub`, the largest cross-sample kernel
//! value) and the current bandwidth `σ₁`, together with its limits and a few
//! numerical checks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelkit::{gamma_from_labels, GammaMode};

/// Class sizes with the Γ mass inside each class and between each ordered
/// pair of classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub counts: Vec<usize>,
    /// `Σ_{i,j ∈ S^g} Γᵢⱼ`, diagonal included.
    pub gamma_within: Vec<f64>,
    /// `[g1][g2] = Σ_{i ∈ g1, j ∈ g2} |Γᵢⱼ|`; the diagonal is unused.
    pub gamma_between: Vec<Vec<f64>>,
}

fn labels_from_counts(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(g, &k)| std::iter::repeat(g).take(k))
        .collect()
}

impl ClassProfile {
    fn check_counts(counts: &[usize]) -> Result<()> {
        if counts.len() < 2 {
            return Err(Error::SingleClass);
        }
        if let Some(g) = counts.iter().position(|&k| k == 0) {
            return Err(Error::EmptyClass(g.to_string()));
        }
        Ok(())
    }

    /// Γ with `+1` inside classes and `−1` across.
    pub fn signed(counts: &[usize]) -> Result<Self> {
        Self::check_counts(counts)?;
        let c = counts.len();
        let gamma_within = counts.iter().map(|&k| (k * k) as f64).collect();
        let gamma_between = (0..c)
            .map(|a| (0..c).map(|b| (counts[a] * counts[b]) as f64).collect())
            .collect();
        Ok(Self {
            counts: counts.to_vec(),
            gamma_within,
            gamma_between,
        })
    }

    /// Γ = H Y Yᵀ H.
    pub fn centered(counts: &[usize]) -> Result<Self> {
        Self::check_counts(counts)?;
        let labels = labels_from_counts(counts);
        let gamma = gamma_from_labels(&labels, GammaMode::Centered)?;
        Self::from_gamma(&gamma.values, &labels)
    }

    pub fn with_mode(counts: &[usize], mode: GammaMode) -> Result<Self> {
        match mode {
            GammaMode::Signed => Self::signed(counts),
            GammaMode::Centered => Self::centered(counts),
        }
    }

    /// Sum the blocks of an arbitrary Γ.
    pub fn from_gamma(gamma: &DMatrix<f64>, labels: &[usize]) -> Result<Self> {
        if gamma.nrows() != labels.len() || gamma.ncols() != labels.len() {
            return Err(Error::SizeMismatch(gamma.nrows(), labels.len()));
        }
        let c = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; c];
        for &l in labels {
            counts[l] += 1;
        }
        Self::check_counts(&counts)?;
        let mut within = vec![0.0; c];
        let mut between = vec![vec![0.0; c]; c];
        for j in 0..labels.len() {
            for i in 0..labels.len() {
                let (a, b) = (labels[i], labels[j]);
                if a == b {
                    within[a] += gamma[(i, j)];
                } else {
                    between[a][b] += gamma[(i, j)].abs();
                }
            }
        }
        Ok(Self {
            counts,
            gamma_within: within,
            gamma_between: between,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    /// `H* = Σ_S Γ`.
    pub fn h_star(&self) -> f64 {
        self.gamma_within.iter().sum()
    }

    /// `Σ_{Sᶜ} |Γ|` over ordered class pairs.
    pub fn between_total(&self) -> f64 {
        let c = self.n_classes();
        (0..c)
            .flat_map(|a| (0..c).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| self.gamma_between[a][b])
            .sum()
    }

    fn check_class(&self, g: usize) -> Result<()> {
        if g < self.n_classes() {
            Ok(())
        } else {
            Err(Error::IndexError {
                index: g,
                classes: self.n_classes(),
            })
        }
    }

    /// `𝒩_g = (1/2ζ)[Σ_k n_k² − n_g² + (n_g − 1)²]`.
    pub fn n_within(&self, g: usize, zeta: f64) -> Result<f64> {
        self.check_class(g)?;
        let sq: f64 = self.counts.iter().map(|&k| (k * k) as f64).sum();
        let ng = self.counts[g] as f64;
        Ok((sq - ng * ng + (ng - 1.0).powi(2)) / (2.0 * zeta))
    }

    /// `𝒩_{g1,g2}(ub) = (1/2ζ)[Σ_{k∉{g1,g2}} n_k²ub² + (1 − n_{g1}ub)² + (1 + (n_{g2} − 1)ub)²]`.
    pub fn n_between(&self, g1: usize, g2: usize, ub: f64, zeta: f64) -> Result<f64> {
        self.check_class(g1)?;
        self.check_class(g2)?;
        let rest: f64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != g1 && k != g2)
            .map(|(_, &k)| (k as f64 * ub).powi(2))
            .sum();
        let n1 = self.counts[g1] as f64;
        let n2 = self.counts[g2] as f64;
        Ok((rest + (1.0 - n1 * ub).powi(2) + (1.0 + (n2 - 1.0) * ub).powi(2)) / (2.0 * zeta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEval {
    pub sigma0: f64,
    pub sigma1: f64,
    pub ub: f64,
    pub l: f64,
    pub l_star: f64,
    pub h_star: f64,
}

/// Largest cross-sample kernel value `exp(−d²_min / 2σ₀²)`.
pub fn ub_of_sigma0(min_sq_dist: f64, sigma0: f64) -> f64 {
    (-min_sq_dist / (2.0 * sigma0 * sigma0)).exp()
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// `L` as a function of `ub` directly.
pub fn lower_bound_at_ub(profile: &ClassProfile, ub: f64, sigma1: f64, zeta: f64) -> Result<f64> {
    let s2 = sigma1 * sigma1;
    let c = profile.n_classes();
    let mut l = 0.0;
    for g in 0..c {
        l += profile.gamma_within[g] * (-profile.n_within(g, zeta)? * ub * ub / s2).exp();
    }
    for g1 in 0..c {
        for g2 in 0..c {
            if g1 != g2 {
                l -= profile.gamma_between[g1][g2]
                    * (-profile.n_between(g1, g2, ub, zeta)? / s2).exp();
            }
        }
    }
    Ok(l)
}

/// `L* = Σ_S Γ − Σ_{Sᶜ}|Γ| · exp(−1/(ζσ₁²))`.
pub fn limit_bound(profile: &ClassProfile, sigma1: f64, zeta: f64) -> f64 {
    profile.h_star() - profile.between_total() * (-1.0 / (zeta * sigma1 * sigma1)).exp()
}

pub fn lower_bound(
    profile: &ClassProfile,
    sigma0: f64,
    sigma1: f64,
    min_sq_dist: f64,
    zeta: f64,
) -> Result<BoundEval> {
    check_positive("sigma0", sigma0)?;
    check_positive("sigma1", sigma1)?;
    check_positive("min_sq_dist", min_sq_dist)?;
    check_positive("zeta", zeta)?;
    let ub = ub_of_sigma0(min_sq_dist, sigma0);
    Ok(BoundEval {
        sigma0,
        sigma1,
        ub,
        l: lower_bound_at_ub(profile, ub, sigma1, zeta)?,
        l_star: limit_bound(profile, sigma1, zeta),
        h_star: profile.h_star(),
    })
}

/// Three-class limit:
/// `Σ_S Γ − 2B₁₂e^{−2/2σ²} − 2B₁₃e^{−1/2σ²} − 2B₂₃e^{−1/2σ²}` with each `B`
/// taken over one ordering of the class pair.
pub fn lower_bound_3class(profile: &ClassProfile, sigma1: f64) -> Result<f64> {
    if profile.n_classes() != 3 {
        return Err(Error::WrongClassCount {
            expected: 3,
            got: profile.n_classes(),
        });
    }
    check_positive("sigma1", sigma1)?;
    let b = &profile.gamma_between;
    let s = 2.0 * sigma1 * sigma1;
    Ok(profile.h_star()
        - 2.0 * b[0][1] * (-2.0 / s).exp()
        - 2.0 * b[0][2] * (-1.0 / s).exp()
        - 2.0 * b[1][2] * (-1.0 / s).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub non_increasing: bool,
    /// `(index, ub, previous L, L)` of the first increase beyond the slack.
    pub first_violation: Option<(usize, f64, f64, f64)>,
    pub values: Vec<f64>,
}

/// Evaluate `L(ub)` along an ascending grid and check it never increases.
pub fn monotonicity_scan(
    profile: &ClassProfile,
    sigma1: f64,
    ub_grid: &[f64],
    zeta: f64,
) -> Result<MonotonicityReport> {
    if ub_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter("ub grid must be strictly ascending".into()));
    }
    if ub_grid.iter().any(|&u| !(0.0..1.0).contains(&u)) {
        return Err(Error::InvalidParameter("ub grid must lie in [0, 1)".into()));
    }
    let values = ub_grid
        .iter()
        .map(|&u| lower_bound_at_ub(profile, u, sigma1, zeta))
        .collect::<Result<Vec<f64>>>()?;
    let slack = 1e-12 * profile.h_star().abs().max(1.0);
    let first_violation = values
        .windows(2)
        .position(|p| p[1] > p[0] + slack)
        .map(|i| (i + 1, ub_grid[i + 1], values[i], values[i + 1]));
    Ok(MonotonicityReport {
        non_increasing: first_violation.is_none(),
        first_violation,
        values,
    })
}

/// `δ_l = (H* − H₀)/(l + 1)` for `l = 1..=layers`.
pub fn delta_schedule(h0: f64, h_star: f64, layers: usize) -> Result<Vec<f64>> {
    if !(h0 < h_star) {
        return Err(Error::InvalidParameter(format!(
            "need H0 < H*, got {h0} and {h_star}"
        )));
    }
    Ok((1..=layers).map(|l| (h_star - h0) / (l + 1) as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCheck {
    pub within_schedule: bool,
    pub strictly_increasing: bool,
}

impl RiskCheck {
    pub fn accepted(&self) -> bool {
        self.within_schedule && self.strictly_increasing
    }
}

/// Check `H* − H_l ≤ δ_l` for every layer and that the sequence strictly
/// increases.
pub fn check_risk_sequence(h_star: f64, risks: &[f64], deltas: &[f64]) -> Result<RiskCheck> {
    if risks.len() != deltas.len() {
        return Err(Error::SizeMismatch(risks.len(), deltas.len()));
    }
    let tol = 1e-12 * h_star.abs().max(1.0);
    Ok(RiskCheck {
        within_schedule: risks.iter().zip(deltas).all(|(h, d)| h_star - h <= d + tol),
        strictly_increasing: risks.windows(2).all(|p| p[1] > p[0]),
    })
}

/// How the surrogate Gram's off-diagonal entries are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurrogateGram {
    /// Every off-diagonal entry equals `ub`.
    Constant,
    /// Off-diagonal entries uniform in `[0, ub]`, seeded.
    Uniform(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateCheck {
    /// HSIC of the class-sum projection of the surrogate points.
    pub hsic: f64,
    pub bound: f64,
    /// Normalizer used in the bound: the smallest squared class-sum norm.
    pub zeta: f64,
    pub holds: bool,
}

/// Build points with a prescribed Gram (unit diagonal, off-diagonals at most
/// `ub`) by Cholesky factorization, project them onto the normalized class-sum
/// directions, and compare the resulting HSIC with `L`.
pub fn surrogate_check(
    counts: &[usize],
    mode: GammaMode,
    ub: f64,
    sigma1: f64,
    gram: SurrogateGram,
) -> Result<SurrogateCheck> {
    check_positive("sigma1", sigma1)?;
    if !(0.0..1.0).contains(&ub) {
        return Err(Error::InvalidParameter(format!("ub must be in [0, 1), got {ub}")));
    }
    let profile = ClassProfile::with_mode(counts, mode)?;
    let labels = labels_from_counts(counts);
    let n = labels.len();
    let mut k = match gram {
        SurrogateGram::Constant => DMatrix::from_element(n, n, ub),
        SurrogateGram::Uniform(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut k = DMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..j {
                    let v = rng.gen_range(0.0..=ub);
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            k
        }
    };
    k.fill_diagonal(1.0);
    let chol = k
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("surrogate Gram is not positive definite".into()))?;
    let r = chol.l();
    let c = counts.len();
    let mut ws = DMatrix::zeros(n, c);
    for (i, &g) in labels.iter().enumerate() {
        let mut col = ws.column_mut(g);
        col += r.row(i).transpose();
    }
    let norms: Vec<f64> = ws.column_iter().map(|col| col.norm_squared()).collect();
    for (g, mut col) in ws.column_iter_mut().enumerate() {
        col /= norms[g].sqrt();
    }
    let zeta = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma = match mode {
        GammaMode::Centered => gamma_from_labels(&labels, GammaMode::Centered)?.values,
        GammaMode::Signed => gamma_from_labels(&labels, GammaMode::Signed)?.values,
    };
    let p = &r * &ws;
    let kp = crate::kernelkit::gaussian_from_sq_dists(&crate::linalg::pairwise_sq_dists(&p), sigma1);
    let hsic = gamma.component_mul(&kp).sum();
    let bound = lower_bound_at_ub(&profile, ub, sigma1, zeta)?;
    Ok(SurrogateCheck {
        hsic,
        bound,
        zeta,
        holds: hsic >= bound - 1e-9,
    })
}
