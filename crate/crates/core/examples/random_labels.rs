//! Fit randomly labelled Gaussian points: the network memorizes the training
//! split but cannot generalize.

use kdn::crossval::{cross_validate, summarize};
use kdn::dataio::gen_random;
use kdn::network::TrainConfig;

fn main() -> kdn::Result<()> {
    let ds = gen_random(80, 2, 1)?;
    let (_, folds) = cross_validate(&ds, 10, 1, &TrainConfig::default(), 1)?;
    let s = summarize(&folds);
    println!(
        "train {:.3} ± {:.3}, test {:.3} ± {:.3}, depth {:.1}",
        s.train_acc.mean, s.train_acc.std, s.test_acc.mean, s.test_acc.std, s.depth.mean
    );
    Ok(())
}
