use std::path::PathBuf;
use std::sync::OnceLock;

use kdn::dataio::{gen_spiral, load_csv, make_folds, standardize, DataSet, LabelColumn};
use kdn::heatmap::block_means;
use kdn::kernelkit::gaussian_from_sq_dists;
use kdn::linalg::pairwise_sq_dists;
use kdn::metrics::{accuracy, block_gap, csr};
use kdn::network::{fit, NetworkModel, TrainConfig};

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn wine() -> DataSet {
    load_csv(data_path("wine.csv"), &LabelColumn::Name("class".into())).unwrap()
}

fn spiral() -> DataSet {
    gen_spiral(100, 0.1, 1).unwrap()
}

fn spiral_model() -> &'static (DataSet, NetworkModel) {
    static M: OnceLock<(DataSet, NetworkModel)> = OnceLock::new();
    M.get_or_init(|| {
        let ds = spiral();
        let m = fit(&ds, &TrainConfig { seed: 1, ..TrainConfig::default() }).unwrap();
        (ds, m)
    })
}

fn wine_model() -> &'static (DataSet, NetworkModel) {
    static M: OnceLock<(DataSet, NetworkModel)> = OnceLock::new();
    M.get_or_init(|| {
        let ds = wine();
        let m = fit(&ds, &TrainConfig::default()).unwrap();
        (ds, m)
    })
}

#[test]
fn wine_shape_and_stratified_folds() {
    let ds = wine();
    assert_eq!((ds.n(), ds.d(), ds.n_classes()), (178, 13, 3));
    let plan = make_folds(&ds, 10, 0).unwrap();
    for (f, per_class) in plan.class_counts(&ds.labels, 3).iter().enumerate() {
        for (c, &k) in per_class.iter().enumerate() {
            let exact = ds.n_per_class[c] as f64 / 10.0;
            assert!((k as f64 - exact).abs() <= 1.0, "fold {f}: {per_class:?}");
        }
    }
}

#[test]
fn cancer_shape() {
    let ds = load_csv(data_path("breast_cancer.csv"), &LabelColumn::Name("class".into())).unwrap();
    assert_eq!((ds.n(), ds.d(), ds.n_classes()), (569, 30, 2));
}

#[test]
fn spiral_model_fits_training_data() {
    let (ds, m) = spiral_model();
    assert!(m.depth() <= 6);
    assert!(m.final_hsic_star() >= 0.95);
    let acc = accuracy(&m.predict(&ds.features).unwrap(), &ds.labels);
    assert!(acc >= 0.99, "train accuracy {acc}");
}

#[test]
fn layer_invariants() {
    for (ds, m) in [spiral_model(), wine_model()] {
        assert!(m.depth() <= m.config.max_layers);
        for (l, layer) in m.layers.iter().enumerate() {
            let q = layer.w.ncols();
            assert!(q >= 1);
            let err = (layer.w.transpose() * &layer.w - nalgebra::DMatrix::identity(q, q)).amax();
            assert!(err <= 1e-8, "layer {l}: {err}");
            assert!((-1e-9..=1.0 + 1e-9).contains(&layer.hsic_star));
            if l > 0 {
                assert_eq!(m.layers[l - 1].widths.2, layer.widths.0);
            }
        }
        assert_eq!(m.class_centers.nrows(), ds.n_classes());
        for l in 1..=m.depth() {
            let r = m.forward(&ds.features, l).unwrap();
            let max_norm = r.row_iter().map(|row| row.norm()).fold(0.0, f64::max);
            assert!(max_norm <= 2f64.sqrt() + 1e-12);
        }
    }
}

#[test]
fn scatter_ratio_shrinks_on_spiral() {
    let (ds, m) = spiral_model();
    let metrics = m.layer_metrics(&ds.features, &ds.labels).unwrap();
    assert!(metrics.last().unwrap().scatter_ratio < metrics[0].scatter_ratio);
}

#[test]
fn trained_wine_csr_is_small() {
    let (ds, m) = wine_model();
    let f = m.forward(&ds.features, m.depth()).unwrap();
    let c = csr(&f, &ds.labels).unwrap().value;
    assert!(c <= 0.1, "csr {c}");
}

#[test]
fn wine_first_bandwidth_in_band() {
    let (_, m) = wine_model();
    let s = m.layers[0].sigma;
    assert!((0.1..=2.0).contains(&s), "sigma {s}");
}

/// Worst-case block gap of `K_{R_l}` per layer, using the layer's own σ.
fn output_gaps(ds: &DataSet, m: &NetworkModel) -> Vec<f64> {
    (1..=m.depth())
        .map(|l| {
            let r = m.forward(&ds.features, l).unwrap();
            let k = gaussian_from_sq_dists(&pairwise_sq_dists(&r), m.layers[l - 1].sigma);
            block_gap(&k, &ds.labels).unwrap()
        })
        .collect()
}

#[test]
fn block_structure_does_not_degrade() {
    for (name, (ds, m)) in [("spiral", spiral_model()), ("wine", wine_model())] {
        let gaps = output_gaps(ds, m);
        for p in gaps.windows(2) {
            assert!(p[1] >= p[0] - 0.05, "{name}: {gaps:?}");
        }
    }
}

#[test]
fn best_layer_has_near_best_gap() {
    for (name, (ds, m)) in [("spiral", spiral_model()), ("wine", wine_model())] {
        let metrics = m.layer_metrics(&ds.features, &ds.labels).unwrap();
        let best = (0..metrics.len())
            .max_by(|&a, &b| metrics[a].hsic_star.total_cmp(&metrics[b].hsic_star))
            .unwrap();
        let top_gap = metrics.iter().map(|x| x.block_gap).fold(f64::NEG_INFINITY, f64::max);
        assert!(metrics[best].block_gap >= top_gap - 0.05, "{name}: {metrics:?}");
    }
}

#[test]
fn spiral_heatmap_blocks() {
    let (ds, m) = spiral_model();
    let last = m.layer_kernel(&ds.features, m.depth()).unwrap();
    let (inside, outside) = block_means(&last, &ds.labels);
    assert!(inside <= 60.0 && outside >= 200.0, "inside {inside} outside {outside}");
    let first = m.layer_kernel(&ds.features, 0).unwrap();
    let (i0, o0) = block_means(&first, &ds.labels);
    assert!(outside - inside > o0 - i0);
}

#[test]
fn standardization_is_stored_for_prediction() {
    let (ds, m) = wine_model();
    let (z, _) = standardize(ds).unwrap();
    let a = m.forward(&ds.features, 0).unwrap();
    assert!((a - &z.features).amax() < 1e-12);
}
