//! Render the input kernel and the last layer's kernel of a spiral network as
//! PGM images. Pass an output directory as the first argument (default `.`).

use std::path::PathBuf;

use kdn::dataio::gen_spiral;
use kdn::heatmap::{block_means, render_pgm};
use kdn::network::{fit, TrainConfig};

fn main() -> kdn::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("."), PathBuf::from);
    let ds = gen_spiral(100, 0.1, 1)?;
    let model = fit(&ds, &TrainConfig::default())?;
    for layer in [0, model.depth()] {
        let k = model.layer_kernel(&ds.features, layer)?;
        let (inside, outside) = block_means(&k, &ds.labels);
        let path = out.join(format!("spiral_layer{layer}.pgm"));
        std::fs::write(&path, render_pgm(&k, &ds.labels)).map_err(|e| kdn::Error::Io {
            path: path.clone(),
            source: e,
        })?;
        println!(
            "layer {layer}: mean pixel within classes {inside:.1}, across {outside:.1} -> {}",
            path.display()
        );
    }
    Ok(())
}
