use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crossval::{FoldOutcome, Summary};
use crate::error::{Error, Result};
use crate::metrics::LayerMetrics;
use crate::network::TrainConfig;

pub const REPORT_FILE: &str = "report.json";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub hsic_star: f64,
    pub csr: f64,
    pub silhouette: f64,
    pub depth: usize,
    /// `"(α, β)"` per layer.
    pub w_dims: Vec<String>,
    pub per_layer: Vec<LayerMetrics>,
    pub model_dir: String,
}

impl FoldReport {
    pub fn new(o: &FoldOutcome, n_train: usize, n_test: usize, model_dir: String) -> Self {
        Self {
            fold: o.fold,
            seed: o.seed,
            n_train,
            n_test,
            train_acc: o.train_acc,
            test_acc: o.test_acc,
            hsic_star: o.hsic_star(),
            csr: o.csr,
            silhouette: o.silhouette,
            depth: o.depth(),
            w_dims: o
                .model
                .w_dims()
                .iter()
                .map(|(a, b)| format!("({a}, {b})"))
                .collect(),
            per_layer: o.per_layer.clone(),
            model_dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub data: String,
    pub n: usize,
    pub d: usize,
    pub n_classes: usize,
    pub folds: usize,
    pub config: TrainConfig,
    pub summary: Summary,
    pub per_fold: Vec<FoldReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Load a report, rejecting other schema versions.
pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(e.to_string()))?;
    let found = raw
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Manifest("missing schema_version".into()))?;
    if found != u64::from(REPORT_SCHEMA_VERSION) {
        return Err(Error::ManifestVersionMismatch {
            found: found as u32,
            supported: REPORT_SCHEMA_VERSION,
        });
    }
    serde_json::from_value(raw).map_err(|e| Error::Manifest(e.to_string()))
}
