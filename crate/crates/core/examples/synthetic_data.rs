//! Write the synthetic datasets to CSV. Pass an output directory as the first
//! argument (default `.`).

use std::path::PathBuf;

use kdn::dataio::{gen_adversarial, gen_random, gen_spiral, write_csv, ADVERSARIAL_NOISE};

fn main() -> kdn::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("."), PathBuf::from);
    let sets = [
        ("random", gen_random(80, 2, 0)?),
        ("adversarial", gen_adversarial(40, ADVERSARIAL_NOISE, 0)?),
        ("spiral", gen_spiral(100, 0.1, 0)?),
    ];
    for (name, ds) in &sets {
        let path = out.join(format!("{name}.csv"));
        write_csv(ds, &path)?;
        println!("{name}: n={} d={} per class {:?} -> {}", ds.n(), ds.d(), ds.n_per_class, path.display());
    }
    Ok(())
}
