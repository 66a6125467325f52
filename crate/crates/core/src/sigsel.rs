//! Bandwidth selection for a layer: either the σ whose solved projection
//! scores the highest HSIC*, or the σ that maximizes the gap between mean
//! same-class and mean cross-class kernel values on the layer input.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ism::{IsmConfig, IsmProblem, IsmResult};
use crate::kernelkit::{gaussian_from_sq_dists, label_gram, GammaMatrix};
use crate::linalg::{median_pairwise_distance, pairwise_sq_dists};
use crate::metrics::hsic_star;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaStrategy {
    #[default]
    GridHsicStar,
    MaxSeparation,
}

impl std::str::FromStr for SigmaStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid_hsic_star" | "grid" => Ok(Self::GridHsicStar),
            "max_separation" | "separation" => Ok(Self::MaxSeparation),
            other => Err(Error::InvalidParameter(format!(
                "unknown sigma strategy {other:?} (expected grid_hsic_star or max_separation)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSearchResult {
    pub sigma: f64,
    /// `(σ, value)` sorted by σ. The value is HSIC* for the grid strategy and
    /// `Tr(K_X Q)` for the separation strategy.
    pub objective_curve: Vec<(f64, f64)>,
    /// `(σ, d_S − d_Sᶜ)`: mean same-class minus mean cross-class kernel value.
    /// Empty for the grid strategy.
    pub separation_curve: Vec<(f64, f64)>,
    pub strategy: SigmaStrategy,
}

/// Which ordered pairs count toward `|S|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairCount {
    /// Ordered pairs `i ≠ j`.
    #[default]
    Distinct,
    /// Ordered pairs including `i = j`, so `|S| = 1ᵀK_Y1`. Under this count
    /// the objective is unchanged when every row is repeated.
    WithSelf,
}

/// Label weighting `Q = ḡ·11ᵀ − (g + ḡ)K_Y` with `g = 1/|S|`, `ḡ = 1/|Sᶜ|`.
#[derive(Debug, Clone)]
pub struct LabelQ {
    pub q: DMatrix<f64>,
    pub g: f64,
    pub g_bar: f64,
}

/// [`build_q_label_with`] using ordered pairs `i ≠ j`.
pub fn build_q_label(labels: &[usize]) -> Result<LabelQ> {
    build_q_label_with(labels, PairCount::Distinct)
}

pub fn build_q_label_with(labels: &[usize], pairs: PairCount) -> Result<LabelQ> {
    let n = labels.len();
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; c];
    for &l in labels {
        counts[l] += 1;
    }
    let same: usize = match pairs {
        PairCount::Distinct => counts.iter().map(|&k| k * k.saturating_sub(1)).sum(),
        PairCount::WithSelf => counts.iter().map(|&k| k * k).sum(),
    };
    let cross: usize = n * n - counts.iter().map(|&k| k * k).sum::<usize>();
    if cross == 0 {
        return Err(Error::SingleClass);
    }
    if same == 0 {
        return Err(Error::InvalidParameter(
            "no same-class pairs: every class has a single sample".into(),
        ));
    }
    let g = 1.0 / same as f64;
    let g_bar = 1.0 / cross as f64;
    let q = label_gram(labels).map(|y| g_bar - (g + g_bar) * y);
    Ok(LabelQ { q, g, g_bar })
}

/// Separation objective evaluated from precomputed squared distances.
struct Separation<'a> {
    d2: DMatrix<f64>,
    labels: &'a [usize],
    lq: LabelQ,
}

impl Separation<'_> {
    fn trace(&self, sigma: f64) -> f64 {
        let k = gaussian_from_sq_dists(&self.d2, sigma);
        k.component_mul(&self.lq.q).sum()
    }

    fn gap(&self, sigma: f64) -> f64 {
        let c = 1.0 / (2.0 * sigma * sigma);
        let (mut s, mut sc) = (0.0, 0.0);
        let n = self.labels.len();
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                let k = (-self.d2[(i, j)] * c).exp();
                if self.labels[i] == self.labels[j] {
                    s += k;
                } else {
                    sc += k;
                }
            }
        }
        s * self.lq.g - sc * self.lq.g_bar
    }
}

/// Points of a log-spaced grid over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

pub const CURVE_POINTS: usize = 200;
pub const GOLDEN_ITERS: usize = 80;

/// Default search interval `[0.05·m, 20·m]` around the median pairwise
/// distance `m` of `x`.
pub fn default_interval(x: &DMatrix<f64>) -> Result<(f64, f64)> {
    let m = median_pairwise_distance(x);
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(
            "median pairwise distance is zero".into(),
        ));
    }
    Ok((0.05 * m, 20.0 * m))
}

/// Minimize `Tr(K_X(σ) Q)` over `σ ∈ [lo, hi]`: a log-grid scan brackets the
/// minimum and golden-section search in `log σ` refines it.
pub fn sigma_by_separation(
    x: &DMatrix<f64>,
    labels: &[usize],
    interval: (f64, f64),
) -> Result<SigmaSearchResult> {
    sigma_by_separation_with(x, labels, interval, PairCount::Distinct)
}

pub fn sigma_by_separation_with(
    x: &DMatrix<f64>,
    labels: &[usize],
    interval: (f64, f64),
    pairs: PairCount,
) -> Result<SigmaSearchResult> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "invalid search interval [{lo}, {hi}]"
        )));
    }
    if x.nrows() != labels.len() {
        return Err(Error::SizeMismatch(x.nrows(), labels.len()));
    }
    let sep = Separation {
        d2: pairwise_sq_dists(x),
        labels,
        lq: build_q_label_with(labels, pairs)?,
    };
    let grid = log_grid(lo, hi, CURVE_POINTS);
    let values: Vec<f64> = grid.iter().map(|&s| sep.trace(s)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v < values[b] { i } else { b });

    let mut a = grid[best.saturating_sub(1)].ln();
    let mut b = grid[(best + 1).min(grid.len() - 1)].ln();
    let f = |t: f64| sep.trace(t.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let refined = t.exp().clamp(lo, hi);
    let sigma = if f(t) <= values[best] { refined } else { grid[best] };

    Ok(SigmaSearchResult {
        sigma,
        objective_curve: grid.iter().copied().zip(values).collect(),
        separation_curve: grid.iter().map(|&s| (s, sep.gap(s))).collect(),
        strategy: SigmaStrategy::MaxSeparation,
    })
}

/// Outcome of a grid search that also keeps the winning solve.
#[derive(Debug, Clone)]
pub struct GridChoice {
    pub search: SigmaSearchResult,
    pub solution: IsmResult,
    pub hsic_star: f64,
}

/// HSIC* of `K_{RW}(σ)` against the label kernel.
pub fn projected_hsic_star(
    r: &DMatrix<f64>,
    w: &DMatrix<f64>,
    sigma: f64,
    ky: &DMatrix<f64>,
) -> Result<f64> {
    let k = gaussian_from_sq_dists(&pairwise_sq_dists(&(r * w)), sigma);
    Ok(hsic_star(&k, ky)?.value)
}

/// Solve the layer at every σ in `grid` and keep the one with the largest
/// HSIC*; ties go to the smaller σ. Failed grid points are logged and skipped.
pub fn hsic_grid_search(
    r: &DMatrix<f64>,
    gamma: &GammaMatrix,
    grid: &[f64],
    cfg: &IsmConfig,
) -> Result<GridChoice> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty sigma grid".into()));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let problem = IsmProblem::new(r, gamma)?;
    let ky = label_gram(&gamma.class_of);
    let outcomes: Vec<Result<(IsmResult, f64)>> = grid
        .par_iter()
        .map(|&s| {
            let res = problem.solve(s, cfg)?;
            let h = projected_hsic_star(r, &res.w, s, &ky)?;
            Ok((res, h))
        })
        .collect();

    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, IsmResult, f64)> = None;
    let mut last_err = None;
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok((res, h)) => {
                curve.push((grid[i], h));
                if best.as_ref().map_or(true, |b| h > b.2) {
                    best = Some((i, res, h));
                }
            }
            Err(e) => {
                log::warn!("sigma {} skipped: {e}", grid[i]);
                last_err = Some(e);
            }
        }
    }
    let (i, solution, h) = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or(Error::InvalidParameter("no grid point".into()))),
    };
    Ok(GridChoice {
        search: SigmaSearchResult {
            sigma: grid[i],
            objective_curve: curve,
            separation_curve: Vec::new(),
            strategy: SigmaStrategy::GridHsicStar,
        },
        solution,
        hsic_star: h,
    })
}

/// Grid search returning only the bandwidth summary.
pub fn sigma_by_hsic_grid(
    r: &DMatrix<f64>,
    gamma: &GammaMatrix,
    grid: &[f64],
    cfg: &IsmConfig,
) -> Result<SigmaSearchResult> {
    hsic_grid_search(r, gamma, grid, cfg).map(|c| c.search)
}
