//! Kernel dependence networks: classifiers trained one layer at a time by
//! solving an HSIC maximization per layer with a spectral method, using
//! random Fourier features as the activation.
//!
//! ```no_run
//! use kdn::{dataio, network};
//!
//! let ds = dataio::gen_spiral(100, 0.1, 1)?;
//! let model = network::fit(&ds, &network::TrainConfig::default())?;
//! let pred = model.predict(&ds.features)?;
//! # Ok::<(), kdn::Error>(())
//! ```

pub mod bounds;
pub mod cli;
pub mod crossval;
pub mod dataio;
pub mod error;
pub mod heatmap;
pub mod ism;
pub mod kernelkit;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod rff;
pub mod sigsel;

pub use dataio::{DataSet, FoldPlan};
pub use error::{Error, Result};
pub use ism::{IsmConfig, IsmResult};
pub use kernelkit::{GammaMatrix, GammaMode, GramMatrix, KernelDescriptor};
pub use network::{LayerSpec, NetworkModel, TrainConfig};
pub use rff::RffMap;
pub use sigsel::{SigmaSearchResult, SigmaStrategy};
