//! Gram matrices, centering, the label matrix Γ and the Φ matrices that drive
//! the spectral solver.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{double_center, minus_laplacian, pairwise_sq_dists, symmetrized};

/// The five supported kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelDescriptor {
    Linear,
    /// `‖u − v‖²`
    Squared,
    /// `(uᵀv)^p`, no offset term.
    Polynomial { p: u32 },
    Gaussian { sigma: f64 },
    /// `√(‖u − v‖² + σ²)`
    Multiquadratic { sigma: f64 },
}

impl KernelDescriptor {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelDescriptor::Polynomial { p } if p < 2 => Err(Error::InvalidParameter(format!(
                "polynomial degree must be >= 2, got {p}"
            ))),
            KernelDescriptor::Gaussian { sigma } | KernelDescriptor::Multiquadratic { sigma }
                if !(sigma > 0.0 && sigma.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "bandwidth must be positive, got {sigma}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelDescriptor::Linear => "linear",
            KernelDescriptor::Squared => "squared",
            KernelDescriptor::Polynomial { .. } => "polynomial",
            KernelDescriptor::Gaussian { .. } => "gaussian",
            KernelDescriptor::Multiquadratic { .. } => "multiquadratic",
        }
    }

    /// Whether Φ depends on the current projection `W`.
    pub fn needs_w(&self) -> bool {
        matches!(
            self,
            KernelDescriptor::Polynomial { .. }
                | KernelDescriptor::Gaussian { .. }
                | KernelDescriptor::Multiquadratic { .. }
        )
    }
}

/// Symmetric kernel matrix together with the kernel that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub descriptor: KernelDescriptor,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// How Γ is built from labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    /// `H Y Yᵀ H`.
    #[default]
    Centered,
    /// `+1` for same-class pairs, `−1` otherwise.
    Signed,
}

/// Label matrix Γ with its class partition.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub values: DMatrix<f64>,
    pub class_of: Vec<usize>,
    pub mode: GammaMode,
}

impl GammaMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.class_of.iter().max().map_or(0, |m| m + 1)
    }
}

fn check_finite(z: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
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

/// Gaussian kernel matrix from precomputed squared distances. Values below
/// the smallest normal `f64` are stored as 0.
pub fn gaussian_from_sq_dists(d2: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let c = 1.0 / (2.0 * sigma * sigma);
    let mut k = d2.map(|v| {
        let e = (-v * c).exp();
        if e < f64::MIN_POSITIVE {
            0.0
        } else {
            e
        }
    });
    for i in 0..k.nrows() {
        k[(i, i)] = 1.0;
    }
    k
}

/// `K[i][j] = exp(−‖zᵢ − zⱼ‖² / 2σ²)`, unit diagonal.
pub fn gaussian_gram(z: &DMatrix<f64>, sigma: f64) -> Result<GramMatrix> {
    check_sigma(sigma)?;
    check_finite(z, "gram input")?;
    Ok(GramMatrix {
        values: gaussian_from_sq_dists(&pairwise_sq_dists(z), sigma),
        descriptor: KernelDescriptor::Gaussian { sigma },
    })
}

/// Kernel matrix over the rows of `z` for any supported kernel.
pub fn gram(z: &DMatrix<f64>, descriptor: KernelDescriptor) -> Result<GramMatrix> {
    descriptor.validate()?;
    check_finite(z, "gram input")?;
    let values = match descriptor {
        KernelDescriptor::Gaussian { sigma } => return gaussian_gram(z, sigma),
        KernelDescriptor::Linear => symmetrized(&(z * z.transpose())),
        KernelDescriptor::Squared => pairwise_sq_dists(z),
        KernelDescriptor::Polynomial { p } => {
            symmetrized(&(z * z.transpose()).map(|v| v.powi(p as i32)))
        }
        KernelDescriptor::Multiquadratic { sigma } => {
            pairwise_sq_dists(z).map(|v| (v + sigma * sigma).sqrt())
        }
    };
    Ok(GramMatrix { values, descriptor })
}

/// `H K H` with `H = I − 11ᵀ/n`.
pub fn center_gram(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if k.nrows() != k.ncols() {
        return Err(Error::SizeMismatch(k.nrows(), k.ncols()));
    }
    Ok(double_center(k))
}

/// `Y Yᵀ` for one-hot `Y`: 1 for same-class pairs, 0 otherwise.
pub fn label_gram(labels: &[usize]) -> DMatrix<f64> {
    let n = labels.len();
    DMatrix::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 })
}

/// Build Γ from integer labels.
pub fn gamma_from_labels(labels: &[usize], mode: GammaMode) -> Result<GammaMatrix> {
    if labels.is_empty() {
        return Err(Error::EmptyClass("<all>".into()));
    }
    let values = match mode {
        GammaMode::Centered => double_center(&label_gram(labels)),
        GammaMode::Signed => {
            let n = labels.len();
            DMatrix::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { -1.0 })
        }
    };
    Ok(GammaMatrix {
        values,
        class_of: labels.to_vec(),
        mode,
    })
}

/// Outcome of [`gamma_sign_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    pub holds: bool,
    /// Pairs `(i, j)`, `i < j`, whose sign disagrees with class equality.
    pub violating_pairs: Vec<(usize, usize)>,
    /// Whether every class is smaller than the union of any two others.
    pub size_condition: bool,
    pub note: Option<String>,
}

/// Check that Γ is positive on same-class pairs and negative across classes.
pub fn gamma_sign_check(gamma: &GammaMatrix) -> SignReport {
    let n = gamma.n();
    let c = gamma.n_classes();
    let mut counts = vec![0usize; c];
    for &l in &gamma.class_of {
        counts[l] += 1;
    }
    if c < 2 {
        let zero = gamma.values.iter().all(|v| v.abs() <= 1e-12);
        return SignReport {
            holds: zero,
            violating_pairs: Vec::new(),
            size_condition: false,
            note: Some("single class: Γ vanishes, sign pattern holds vacuously".into()),
        };
    }
    let size_condition = (0..c).all(|g| {
        (0..c)
            .filter(|&a| a != g)
            .all(|a| ((a + 1)..c).filter(|&b| b != g).all(|b| counts[g] < counts[a] + counts[b]))
    });
    let mut violating_pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = gamma.values[(i, j)];
            let same = gamma.class_of[i] == gamma.class_of[j];
            if (same && v <= 0.0) || (!same && v >= 0.0) {
                violating_pairs.push((i, j));
            }
        }
    }
    SignReport {
        holds: violating_pairs.is_empty(),
        violating_pairs,
        size_condition,
        note: (!size_condition)
            .then(|| "a class is at least as large as the union of two others".to_string()),
    }
}

/// `2 Xᵀ (D_Ψ − Ψ) X`.
pub fn laplacian_quadratic(x: &DMatrix<f64>, psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if psi.nrows() != psi.ncols() {
        return Err(Error::SizeMismatch(psi.nrows(), psi.ncols()));
    }
    if psi.nrows() != x.nrows() {
        return Err(Error::SizeMismatch(psi.nrows(), x.nrows()));
    }
    let lap = -minus_laplacian(psi);
    Ok(symmetrized(&(x.transpose() * lap * x)) * 2.0)
}

fn sandwich(r: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrized(&(r.transpose() * m * r))
}

fn check_square_n(gamma: &DMatrix<f64>, n: usize) -> Result<()> {
    if gamma.nrows() != gamma.ncols() {
        return Err(Error::SizeMismatch(gamma.nrows(), gamma.ncols()));
    }
    if gamma.nrows() != n {
        return Err(Error::SizeMismatch(gamma.nrows(), n));
    }
    Ok(())
}

/// Initial Φ₀ for each kernel; independent of `W`.
pub fn phi0_matrix(
    kind: KernelDescriptor,
    r: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    kind.validate()?;
    check_square_n(gamma, r.nrows())?;
    let lap = -minus_laplacian(gamma);
    Ok(match kind {
        KernelDescriptor::Linear | KernelDescriptor::Polynomial { .. } => sandwich(r, gamma),
        KernelDescriptor::Squared | KernelDescriptor::Multiquadratic { .. } => sandwich(r, &lap),
        KernelDescriptor::Gaussian { .. } => -sandwich(r, &lap),
    })
}

/// Φ for each kernel at projection `W` (required for the polynomial,
/// Gaussian and multiquadratic kernels).
pub fn phi_matrix(
    kind: KernelDescriptor,
    r: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    w: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    kind.validate()?;
    check_square_n(gamma, r.nrows())?;
    let projected = || -> Result<DMatrix<f64>> {
        let w = w.ok_or(Error::MissingW(kind.name()))?;
        if w.nrows() != r.ncols() {
            return Err(Error::DimMismatch {
                expected: r.ncols(),
                got: w.nrows(),
            });
        }
        Ok(r * w)
    };
    Ok(match kind {
        KernelDescriptor::Linear => sandwich(r, gamma),
        KernelDescriptor::Squared => sandwich(r, &-minus_laplacian(gamma)),
        KernelDescriptor::Polynomial { p } => {
            let z = projected()?;
            let k = (&z * z.transpose()).map(|v| v.powi(p as i32 - 1));
            sandwich(r, &gamma.component_mul(&k))
        }
        KernelDescriptor::Gaussian { sigma } => {
            let k = gaussian_gram(&projected()?, sigma)?.values;
            sandwich(r, &minus_laplacian(&gamma.component_mul(&k)))
        }
        KernelDescriptor::Multiquadratic { .. } => {
            let k = gram(&projected()?, kind)?.values.map(|v| 1.0 / v);
            sandwich(r, &-minus_laplacian(&gamma.component_mul(&k)))
        }
    })
}

/// Unnormalized empirical HSIC, `Tr(H K_A H K_B)`.
pub fn hsic_value(ka: &DMatrix<f64>, kb: &DMatrix<f64>) -> Result<f64> {
    if ka.shape() != kb.shape() {
        return Err(Error::SizeMismatch(ka.nrows(), kb.nrows()));
    }
    if ka.nrows() != ka.ncols() {
        return Err(Error::SizeMismatch(ka.nrows(), ka.ncols()));
    }
    let ca = double_center(ka);
    let cb = double_center(kb);
    // Tr(HAH·HBH) = Tr(HAH·B) but the symmetric form is better conditioned
    Ok(ca.component_mul(&cb).sum())
}
