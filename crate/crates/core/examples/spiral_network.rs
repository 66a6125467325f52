//! Ten-fold cross-validation on the three-arm spiral.

use std::time::Instant;

use kdn::crossval::{cross_validate, summarize};
use kdn::dataio::gen_spiral;
use kdn::network::TrainConfig;

fn main() -> kdn::Result<()> {
    let ds = gen_spiral(100, 0.1, 1)?;
    let cfg = TrainConfig {
        seed: 1,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let (_, folds) = cross_validate(&ds, 10, 1, &cfg, 1)?;
    for f in &folds {
        let hs: Vec<String> = f.model.layers.iter().map(|l| format!("{:.3}", l.hsic_star)).collect();
        println!(
            "fold {}: depth {} dims {:?} train {:.3} test {:.3} hsic* [{}]",
            f.fold,
            f.depth(),
            f.model.w_dims(),
            f.train_acc,
            f.test_acc,
            hs.join(", ")
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
