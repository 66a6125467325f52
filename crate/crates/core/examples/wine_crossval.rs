//! Ten-fold cross-validation on the bundled wine table.

use std::time::Instant;

use kdn::crossval::{cross_validate, summarize};
use kdn::dataio::{load_csv, LabelColumn};
use kdn::network::TrainConfig;

fn main() -> kdn::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv");
    let ds = load_csv(path, &LabelColumn::Name("class".into()))?;
    let cfg = TrainConfig::default();
    let start = Instant::now();
    let (_, folds) = cross_validate(&ds, 10, 0, &cfg, 1)?;
    for f in &folds {
        println!(
            "fold {}: depth {} train {:.3} test {:.3} hsic* {:.3}",
            f.fold,
            f.depth(),
            f.train_acc,
            f.test_acc,
            f.hsic_star()
        );
    }
    let s = summarize(&folds);
    println!(
        "train {:.3} ± {:.3}, test {:.3} ± {:.3}, hsic* {:.3}, depth {:.1} ({:.1?})",
        s.train_acc.mean,
        s.train_acc.std,
        s.test_acc.mean,
        s.test_acc.std,
        s.hsic_star.mean,
        s.depth.mean,
        start.elapsed()
    );
    Ok(())
}
