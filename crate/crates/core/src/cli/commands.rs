use std::fmt::Write as _;
use std::path::Path;

use log::info;
use serde::Serialize;

use super::config::{synthetic, RunConfig};
use super::report::{FoldReport, Report, REPORT_FILE, REPORT_SCHEMA_VERSION};
use super::{BoundsArgs, CliError, CliResult, EvalArgs, HeatmapArgs, SigmaArgs, SynthArgs, TrainArgs};
use crate::bounds::{lower_bound, ClassProfile};
use crate::crossval::{cross_validate, summarize};
use crate::dataio::{standardize, write_csv, DataSet};
use crate::error::Error;
use crate::heatmap::render_pgm;
use crate::kernelkit::GammaMode;
use crate::linalg::fmt_f64;
use crate::metrics::{accuracy, LayerMetrics};
use crate::network::NetworkModel;
use crate::sigsel::{default_interval, log_grid, sigma_by_separation};

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

pub fn train(args: &TrainArgs) -> CliResult<Report> {
    let cfg = RunConfig::from_args(args)?;
    let ds = cfg.data.load(cfg.label_col.as_deref(), cfg.train.seed)?;
    info!(
        "loaded {}: n={} d={} classes={}",
        cfg.data.describe(),
        ds.n(),
        ds.d(),
        ds.n_classes()
    );
    let (plan, outcomes) = cross_validate(&ds, cfg.folds, cfg.train.seed, &cfg.train, cfg.jobs)?;

    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut per_fold = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let name = format!("fold_{:02}", o.fold);
        let dir = cfg.out.join(&name);
        o.model.save(&dir)?;
        if cfg.dump_spectra {
            let mut csv = String::from("layer,index,eigenvalue\n");
            for (l, layer) in o.model.layers.iter().enumerate() {
                for (i, v) in layer.eigenvalues.iter().enumerate() {
                    let _ = writeln!(csv, "{},{},{}", l + 1, i, fmt_f64(*v));
                }
            }
            write_text(&dir.join("spectra.csv"), &csv)?;
        }
        let (tr, te) = plan.split(o.fold);
        info!(
            "fold {}: depth {} train {:.4} test {:.4} hsic* {:.4}",
            o.fold,
            o.depth(),
            o.train_acc,
            o.test_acc,
            o.hsic_star()
        );
        per_fold.push(FoldReport::new(o, tr.len(), te.len(), name));
    }
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        data: cfg.data.describe(),
        n: ds.n(),
        d: ds.d(),
        n_classes: ds.n_classes(),
        folds: cfg.folds,
        config: cfg.train.clone(),
        summary: summarize(&outcomes),
        per_fold,
    };
    report.write(&cfg.out.join(REPORT_FILE))?;
    let s = &report.summary;
    println!(
        "train acc {:.4} ± {:.4}  test acc {:.4} ± {:.4}  hsic* {:.4}  depth {:.1}",
        s.train_acc.mean, s.train_acc.std, s.test_acc.mean, s.test_acc.std, s.hsic_star.mean, s.depth.mean
    );
    Ok(report)
}

/// Re-index `ds`'s labels to follow the model's class order.
fn align_labels(ds: &DataSet, model: &NetworkModel) -> CliResult<Vec<usize>> {
    let map: Vec<usize> = ds
        .class_names
        .iter()
        .map(|name| {
            model
                .class_names
                .iter()
                .position(|m| m == name)
                .ok_or_else(|| CliError::data(format!("class {name:?} is unknown to the model")))
        })
        .collect::<CliResult<_>>()?;
    Ok(ds.labels.iter().map(|&l| map[l]).collect())
}

#[derive(Serialize)]
struct EvalOutput {
    schema_version: u32,
    n: usize,
    accuracy: f64,
    per_layer: Vec<LayerMetrics>,
}

pub fn eval(args: &EvalArgs) -> CliResult<()> {
    let model = NetworkModel::load(&args.model)?;
    let ds = args.data.load()?;
    let labels = align_labels(&ds, &model)?;
    let pred = model.predict(&ds.features)?;
    let out = EvalOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        n: ds.n(),
        accuracy: accuracy(&pred, &labels),
        per_layer: model.layer_metrics(&ds.features, &labels)?,
    };
    println!("accuracy {:.4} on {} samples", out.accuracy, out.n);
    if let Some(path) = &args.out {
        let mut s = serde_json::to_string_pretty(&out).expect("eval output serializes");
        s.push('\n');
        write_text(path, &s)?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, sep: char, what: &str) -> CliResult<Vec<T>> {
    s.split(sep)
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::config(format!("invalid {what} component {p:?}")))
        })
        .collect()
}

pub fn sigma(args: &SigmaArgs) -> CliResult<()> {
    let ds = args.data.load()?;
    let (z, _) = standardize(&ds)?;
    let interval = match &args.interval {
        Some(s) => match parse_list::<f64>(s, ':', "interval")?.as_slice() {
            [lo, hi] => (*lo, *hi),
            _ => return Err(CliError::config("--interval must be lo:hi")),
        },
        None => default_interval(&z.features)?,
    };
    let res = sigma_by_separation(&z.features, &z.labels, interval)?;
    let mut csv = String::from("sigma,trace_kq,separation\n");
    for ((s, t), (_, g)) in res.objective_curve.iter().zip(&res.separation_curve) {
        let _ = writeln!(csv, "{},{},{}", fmt_f64(*s), fmt_f64(*t), fmt_f64(*g));
    }
    write_text(&args.out, &csv)?;
    println!("sigma {}", fmt_f64(res.sigma));
    Ok(())
}

pub fn bounds(args: &BoundsArgs) -> CliResult<()> {
    let counts: Vec<usize> = parse_list(&args.counts, ',', "counts")?;
    let mode = match args.gamma.as_str() {
        "signed" => GammaMode::Signed,
        "centered" => GammaMode::Centered,
        other => return Err(CliError::config(format!("unknown gamma mode {other:?}"))),
    };
    let grid = match parse_list::<f64>(&args.sigma0_grid, ':', "sigma0 grid")?.as_slice() {
        [lo, hi, pts] if *pts >= 2.0 && pts.fract() == 0.0 && *lo > 0.0 && hi > lo => {
            log_grid(*lo, *hi, *pts as usize)
        }
        _ => return Err(CliError::config("--sigma0-grid must be lo:hi:points with 0 < lo < hi")),
    };
    let profile = ClassProfile::with_mode(&counts, mode)?;
    let mut csv = String::from("sigma0,sigma1,ub,L,L_star,H_star\n");
    for &s0 in grid.iter().rev() {
        let b = lower_bound(&profile, s0, args.sigma1, args.min_sq_dist, args.zeta)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_f64(b.sigma0),
            fmt_f64(b.sigma1),
            fmt_f64(b.ub),
            fmt_f64(b.l),
            fmt_f64(b.l_star),
            fmt_f64(b.h_star)
        );
    }
    write_text(&args.out, &csv)
}

pub fn heatmap(args: &HeatmapArgs) -> CliResult<()> {
    let model = NetworkModel::load(&args.model)?;
    let ds = args.data.load()?;
    let labels = align_labels(&ds, &model)?;
    let layer = args.layer.unwrap_or(model.depth());
    if layer > model.depth() {
        return Err(CliError::config(format!(
            "layer {layer} out of range (depth {})",
            model.depth()
        )));
    }
    let k = model.layer_kernel(&ds.features, layer)?;
    write_text(&args.out, &render_pgm(&k, &labels))
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let ds = synthetic(&args.name, args.n, args.noise, args.seed)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(write_csv(&ds, &args.out)?)
}
