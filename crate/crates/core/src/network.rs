//! Greedy layer-wise training, prediction and model persistence.
//!
//! Each layer projects its input `R` with orthonormal weights `W` from the
//! spectral solver and applies a random Fourier feature map with the layer's
//! bandwidth. Layers are added until the projected kernel's HSIC* clears the
//! threshold or the depth cap is hit. Prediction assigns the nearest class
//! center in the final feature space.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{class_means, standardize, DataSet, Standardizer};
use crate::error::{Error, Result};
use crate::ism::{IsmConfig, IsmProblem};
use crate::kernelkit::{gamma_from_labels, gaussian_from_sq_dists, label_gram, GammaMode};
use crate::linalg::{matrix_from_csv, matrix_to_csv, median_pairwise_distance, pairwise_sq_dists};
use crate::metrics::{block_gap, hsic_star, scatter_ratio, LayerMetrics};
use crate::rff::{sample_rff, RffMap, DEFAULT_WIDTH};
use crate::sigsel::{default_interval, hsic_grid_search, projected_hsic_star, sigma_by_separation, SigmaStrategy};

pub const SCHEMA_VERSION: u32 = 1;

/// Bandwidth candidates as multiples of the median pairwise distance of the
/// layer input.
pub const DEFAULT_SIGMA_GRID: [f64; 7] = [0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hsic_threshold: f64,
    pub max_layers: usize,
    pub m_rff: usize,
    pub ism: IsmConfig,
    pub sigma_strategy: SigmaStrategy,
    /// Multipliers of the median pairwise distance of each layer's input.
    pub sigma_grid: Vec<f64>,
    pub gamma_mode: GammaMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hsic_threshold: 0.99,
            max_layers: 10,
            m_rff: DEFAULT_WIDTH,
            ism: IsmConfig::default(),
            sigma_strategy: SigmaStrategy::GridHsicStar,
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            gamma_mode: GammaMode::Centered,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hsic_threshold > 0.0 && self.hsic_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hsic_threshold must be in (0, 1], got {}",
                self.hsic_threshold
            )));
        }
        if self.max_layers == 0 || self.m_rff == 0 {
            return Err(Error::InvalidParameter(
                "max_layers and m_rff must be >= 1".into(),
            ));
        }
        if self.sigma_grid.is_empty() || self.sigma_grid.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(
                "sigma_grid must be non-empty and positive".into(),
            ));
        }
        self.ism.validate()
    }
}

/// A trained layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub w: DMatrix<f64>,
    pub sigma: f64,
    pub rff: RffMap,
    pub hsic_star: f64,
    /// `(m_in, q, m_out)`.
    pub widths: (usize, usize, usize),
    pub ism_iters: usize,
    pub ism_converged: bool,
    pub width_fallback: bool,
    pub eigenvalues: Vec<f64>,
}

impl LayerSpec {
    /// `φ(R W)`.
    pub fn apply(&self, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if r.ncols() != self.widths.0 {
            return Err(Error::DimMismatch {
                expected: self.widths.0,
                got: r.ncols(),
            });
        }
        self.rff.apply(&(r * &self.w))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub layers: Vec<LayerSpec>,
    /// `C × m_out`.
    pub class_centers: DMatrix<f64>,
    pub config: TrainConfig,
    pub class_names: Vec<String>,
    /// Applied to raw inputs before the first layer, when present.
    pub transform: Option<Standardizer>,
}

impl NetworkModel {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.widths.0)
    }

    pub fn n_classes(&self) -> usize {
        self.class_centers.nrows()
    }

    pub fn final_hsic_star(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.hsic_star)
    }

    /// `(α, β)` per layer, i.e. the input and output width of each `W`.
    pub fn w_dims(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.widths.0, l.widths.1)).collect()
    }

    fn prepare(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match &self.transform {
            Some(t) => t.apply(x),
            None => {
                if x.ncols() != self.input_dim() {
                    return Err(Error::DimMismatch {
                        expected: self.input_dim(),
                        got: x.ncols(),
                    });
                }
                Ok(x.clone())
            }
        }
    }

    /// Representation after the first `upto` layers; `upto = 0` is the
    /// (standardized) input.
    pub fn forward(&self, x: &DMatrix<f64>, upto: usize) -> Result<DMatrix<f64>> {
        if upto > self.depth() {
            return Err(Error::InvalidParameter(format!(
                "layer {upto} out of range (depth {})",
                self.depth()
            )));
        }
        let mut r = self.prepare(x)?;
        for layer in &self.layers[..upto] {
            r = layer.apply(&r)?;
        }
        Ok(r)
    }

    /// Nearest class center in the final feature space; ties go to the
    /// lowest class index.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        let f = self.forward(x, self.depth())?;
        Ok(nearest_center(&f, &self.class_centers))
    }

    /// The kernel a layer works with: `K_{R_{l−1}W_l}(σ_l)` for `l ≥ 1`, and a
    /// Gaussian kernel on the input at its median pairwise distance for `l = 0`.
    pub fn layer_kernel(&self, x: &DMatrix<f64>, layer: usize) -> Result<DMatrix<f64>> {
        if layer == 0 {
            let r = self.forward(x, 0)?;
            let m = median_pairwise_distance(&r);
            let s = if m > 0.0 { m } else { 1.0 };
            return Ok(gaussian_from_sq_dists(&pairwise_sq_dists(&r), s));
        }
        let r = self.forward(x, layer - 1)?;
        let spec = self.layers.get(layer - 1).ok_or_else(|| {
            Error::InvalidParameter(format!("layer {layer} out of range (depth {})", self.depth()))
        })?;
        Ok(gaussian_from_sq_dists(&pairwise_sq_dists(&(r * &spec.w)), spec.sigma))
    }

    /// HSIC*, scatter ratio and block gap for every layer on labelled data.
    pub fn layer_metrics(&self, x: &DMatrix<f64>, labels: &[usize]) -> Result<Vec<LayerMetrics>> {
        let ky = label_gram(labels);
        let mut r = self.forward(x, 0)?;
        let mut out = Vec::with_capacity(self.depth());
        for spec in &self.layers {
            let k = gaussian_from_sq_dists(&pairwise_sq_dists(&(&r * &spec.w)), spec.sigma);
            out.push(LayerMetrics {
                hsic_star: hsic_star(&k, &ky)?.value,
                scatter_ratio: scatter_ratio(&r, &spec.w, spec.sigma, labels)?.value,
                block_gap: block_gap(&k, labels)?,
            });
            r = spec.apply(&r)?;
        }
        Ok(out)
    }
}

/// Index of the nearest row of `centers` for every row of `f`.
pub fn nearest_center(f: &DMatrix<f64>, centers: &DMatrix<f64>) -> Vec<usize> {
    (0..f.nrows())
        .map(|i| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..centers.nrows() {
                let d = (f.row(i) - centers.row(c)).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Train on data that is already standardized (or deliberately raw).
pub fn train(ds: &DataSet, cfg: &TrainConfig) -> Result<NetworkModel> {
    cfg.validate()?;
    if ds.n_classes() < 2 {
        return Err(Error::SingleClass);
    }
    let gamma = gamma_from_labels(&ds.labels, cfg.gamma_mode)?;
    let ky = label_gram(&ds.labels);
    let mut r = ds.features.clone();
    let mut layers = Vec::new();
    for l in 1..=cfg.max_layers {
        let (sigma, sol, h) = match cfg.sigma_strategy {
            SigmaStrategy::GridHsicStar => {
                let m = median_pairwise_distance(&r);
                if !(m > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "layer {l} input has zero median pairwise distance"
                    )));
                }
                let grid: Vec<f64> = cfg.sigma_grid.iter().map(|k| k * m).collect();
                let choice = hsic_grid_search(&r, &gamma, &grid, &cfg.ism)?;
                (choice.search.sigma, choice.solution, choice.hsic_star)
            }
            SigmaStrategy::MaxSeparation => {
                let sigma = sigma_by_separation(&r, &ds.labels, default_interval(&r)?)?.sigma;
                let sol = IsmProblem::new(&r, &gamma)?.solve(sigma, &cfg.ism)?;
                let h = projected_hsic_star(&r, &sol.w, sigma, &ky)?;
                (sigma, sol, h)
            }
        };
        if sol.width_fallback {
            log::warn!("layer {l}: no positive eigenvalue, keeping the top direction");
        }
        let rff = sample_rff(sol.w.ncols(), sigma, cfg.m_rff, cfg.seed ^ l as u64)?;
        let spec = LayerSpec {
            widths: (r.ncols(), sol.w.ncols(), cfg.m_rff),
            w: sol.w,
            sigma,
            rff,
            hsic_star: h,
            ism_iters: sol.iters,
            ism_converged: sol.converged,
            width_fallback: sol.width_fallback,
            eigenvalues: sol.eigenvalues,
        };
        log::info!(
            "layer {l}: sigma={sigma:.4} q={} hsic*={h:.4} iters={}",
            spec.widths.1,
            spec.ism_iters
        );
        r = spec.apply(&r)?;
        layers.push(spec);
        if h > cfg.hsic_threshold {
            break;
        }
    }
    let class_centers = class_means(&r, &ds.labels, ds.n_classes());
    Ok(NetworkModel {
        layers,
        class_centers,
        config: cfg.clone(),
        class_names: ds.class_names.clone(),
        transform: None,
    })
}

/// Standardize `ds`, train, and keep the transform in the model so that
/// `predict` takes raw inputs.
pub fn fit(ds: &DataSet, cfg: &TrainConfig) -> Result<NetworkModel> {
    let (z, t) = standardize(ds)?;
    let mut model = train(&z, cfg)?;
    model.transform = Some(t);
    Ok(model)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerEntry {
    index: usize,
    sigma: f64,
    hsic_star: f64,
    m_in: usize,
    q: usize,
    m_out: usize,
    rff_seed: u64,
    ism_iters: usize,
    ism_converged: bool,
    width_fallback: bool,
    eigenvalues: Vec<f64>,
    w: FileEntry,
    omega: FileEntry,
    bias: FileEntry,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    config: TrainConfig,
    class_names: Vec<String>,
    transform: Option<Standardizer>,
    w_dims: Vec<(usize, usize)>,
    layers: Vec<LayerEntry>,
    centers: FileEntry,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_entry(dir: &Path, rel: &str, m: &DMatrix<f64>) -> Result<FileEntry> {
    let text = matrix_to_csv(m);
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    Ok(FileEntry {
        path: rel.to_string(),
        sha256: sha256_hex(text.as_bytes()),
    })
}

fn read_entry(dir: &Path, entry: &FileEntry) -> Result<DMatrix<f64>> {
    let path: PathBuf = dir.join(&entry.path);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(Error::ChecksumMismatch(path));
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::Manifest(e.to_string()))?;
    matrix_from_csv(&text)
}

impl NetworkModel {
    /// Write `manifest.json` and one directory of matrices per layer.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut layers = Vec::with_capacity(self.depth());
        for (i, l) in self.layers.iter().enumerate() {
            let sub = format!("layer_{:02}", i + 1);
            layers.push(LayerEntry {
                index: i + 1,
                sigma: l.sigma,
                hsic_star: l.hsic_star,
                m_in: l.widths.0,
                q: l.widths.1,
                m_out: l.widths.2,
                rff_seed: l.rff.seed,
                ism_iters: l.ism_iters,
                ism_converged: l.ism_converged,
                width_fallback: l.width_fallback,
                eigenvalues: l.eigenvalues.clone(),
                w: write_entry(dir, &format!("{sub}/W.csv"), &l.w)?,
                omega: write_entry(dir, &format!("{sub}/omega.csv"), &l.rff.omega)?,
                bias: write_entry(
                    dir,
                    &format!("{sub}/bias.csv"),
                    &DMatrix::from_column_slice(l.rff.bias.len(), 1, l.rff.bias.as_slice()),
                )?,
            });
        }
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            class_names: self.class_names.clone(),
            transform: self.transform.clone(),
            w_dims: self.w_dims(),
            layers,
            centers: write_entry(dir, "centers.csv", &self.class_centers)?,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Manifest(e.to_string()))?;
        let path = dir.join("manifest.json");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
        let found = raw
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Manifest("missing schema_version".into()))?;
        if found != u64::from(SCHEMA_VERSION) {
            return Err(Error::ManifestVersionMismatch {
                found: found as u32,
                supported: SCHEMA_VERSION,
            });
        }
        let manifest: Manifest =
            serde_json::from_value(raw).map_err(|e| Error::Manifest(e.to_string()))?;
        let mut layers = Vec::with_capacity(manifest.layers.len());
        for e in &manifest.layers {
            let w = read_entry(dir, &e.w)?;
            let omega = read_entry(dir, &e.omega)?;
            let bias = read_entry(dir, &e.bias)?;
            if w.shape() != (e.m_in, e.q) || omega.shape() != (e.q, e.m_out) || bias.nrows() != e.m_out {
                return Err(Error::Manifest(format!("layer {} matrix shapes disagree", e.index)));
            }
            layers.push(LayerSpec {
                w,
                sigma: e.sigma,
                rff: RffMap {
                    omega,
                    bias: DVector::from_column_slice(bias.as_slice()),
                    sigma: e.sigma,
                    seed: e.rff_seed,
                },
                hsic_star: e.hsic_star,
                widths: (e.m_in, e.q, e.m_out),
                ism_iters: e.ism_iters,
                ism_converged: e.ism_converged,
                width_fallback: e.width_fallback,
                eigenvalues: e.eigenvalues.clone(),
            });
        }
        let class_centers = read_entry(dir, &manifest.centers)?;
        Ok(Self {
            layers,
            class_centers,
            config: manifest.config,
            class_names: manifest.class_names,
            transform: manifest.transform,
        })
    }
}
