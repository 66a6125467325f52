//! Save a trained model, load it back and check predictions agree.

use kdn::dataio::gen_spiral;
use kdn::network::{fit, NetworkModel, TrainConfig};

fn main() -> kdn::Result<()> {
    let ds = gen_spiral(60, 0.1, 4)?;
    let model = fit(&ds, &TrainConfig::default())?;
    let dir = std::env::temp_dir().join("kdn_model_example");
    model.save(&dir)?;
    let loaded = NetworkModel::load(&dir)?;
    let same = model.predict(&ds.features)? == loaded.predict(&ds.features)?;
    println!("saved {} layers with dims {:?} to {}", model.depth(), model.w_dims(), dir.display());
    println!("predictions identical after reload: {same}");
    Ok(())
}
