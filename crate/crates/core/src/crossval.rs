//! Stratified k-fold evaluation of the layer-wise trainer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{make_folds, DataSet, FoldPlan};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, csr, silhouette, LayerMetrics};
use crate::network::{fit, NetworkModel, TrainConfig};

/// Results for one held-out fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub seed: u64,
    pub model: NetworkModel,
    pub train_acc: f64,
    pub test_acc: f64,
    pub csr: f64,
    pub silhouette: f64,
    /// Metrics of every layer on the training split.
    pub per_layer: Vec<LayerMetrics>,
}

impl FoldOutcome {
    pub fn depth(&self) -> usize {
        self.model.depth()
    }

    pub fn hsic_star(&self) -> f64 {
        self.model.final_hsic_star()
    }
}

/// Seed of fold `fold`'s trainer, derived from the run seed.
pub fn fold_seed(run_seed: u64, fold: usize) -> u64 {
    run_seed ^ ((fold as u64 + 1) << 32)
}

/// Train on every split except `fold` and evaluate on `fold`.
pub fn run_fold(ds: &DataSet, plan: &FoldPlan, fold: usize, cfg: &TrainConfig) -> Result<FoldOutcome> {
    let (train_idx, test_idx) = plan.split(fold);
    let train = ds.subset(&train_idx)?;
    let test = ds.subset(&test_idx)?;
    let seed = fold_seed(cfg.seed, fold);
    let cfg = TrainConfig {
        seed,
        ..cfg.clone()
    };
    let model = fit(&train, &cfg)?;
    let train_pred = model.predict(&train.features)?;
    let test_pred = model.predict(&test.features)?;
    let last = model.forward(&train.features, model.depth())?;
    let per_layer = model.layer_metrics(&train.features, &train.labels)?;
    Ok(FoldOutcome {
        fold,
        seed,
        train_acc: accuracy(&train_pred, &train.labels),
        test_acc: accuracy(&test_pred, &test.labels),
        csr: csr(&last, &train.labels)?.value,
        silhouette: silhouette(&last, &train.labels)?,
        per_layer,
        model,
    })
}

/// Run all folds, `jobs` at a time. Results come back in fold order and do
/// not depend on `jobs`.
pub fn cross_validate(
    ds: &DataSet,
    k: usize,
    split_seed: u64,
    cfg: &TrainConfig,
    jobs: usize,
) -> Result<(FoldPlan, Vec<FoldOutcome>)> {
    let plan = make_folds(ds, k, split_seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let outcomes = pool.install(|| {
        (0..k)
            .into_par_iter()
            .map(|f| run_fold(ds, &plan, f, cfg))
            .collect::<Vec<_>>()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((plan, outcomes))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

/// Fold-averaged summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub train_acc: MeanStd,
    pub test_acc: MeanStd,
    pub hsic_star: MeanStd,
    pub csr: MeanStd,
    pub silhouette: MeanStd,
    pub depth: MeanStd,
}

pub fn summarize(outcomes: &[FoldOutcome]) -> Summary {
    Summary {
        train_acc: MeanStd::of(outcomes.iter().map(|o| o.train_acc)),
        test_acc: MeanStd::of(outcomes.iter().map(|o| o.test_acc)),
        hsic_star: MeanStd::of(outcomes.iter().map(FoldOutcome::hsic_star)),
        csr: MeanStd::of(outcomes.iter().map(|o| o.csr)),
        silhouette: MeanStd::of(outcomes.iter().map(|o| o.silhouette)),
        depth: MeanStd::of(outcomes.iter().map(|o| o.depth() as f64)),
    }
}
