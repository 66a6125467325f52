//! Compare the two bandwidth strategies on the first layer of each dataset:
//! the HSIC* grid over ISM solves, and the kernel-separation objective.

use kdn::dataio::{gen_spiral, load_csv, standardize, LabelColumn};
use kdn::kernelkit::{gamma_from_labels, GammaMode};
use kdn::linalg::median_pairwise_distance;
use kdn::sigsel::{default_interval, hsic_grid_search, sigma_by_separation};
use kdn::network::DEFAULT_SIGMA_GRID;
use kdn::IsmConfig;

fn main() -> kdn::Result<()> {
    let wine = load_csv(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv"),
        &LabelColumn::Name("class".into()),
    )?;
    for (name, ds) in [("spiral", gen_spiral(100, 0.1, 1)?), ("wine", wine)] {
        let (z, _) = standardize(&ds)?;
        let x = &z.features;
        let m = median_pairwise_distance(x);
        let grid: Vec<f64> = DEFAULT_SIGMA_GRID.iter().map(|k| k * m).collect();
        let gamma = gamma_from_labels(&z.labels, GammaMode::Centered)?;
        let by_grid = hsic_grid_search(x, &gamma, &grid, &IsmConfig::default())?;
        let by_sep = sigma_by_separation(x, &z.labels, default_interval(x)?)?;
        println!("{name}: median distance {m:.3}");
        for (s, h) in &by_grid.search.objective_curve {
            println!("  sigma {s:8.4}  hsic* {h:.4}");
        }
        println!(
            "  grid choice {:.4} (hsic* {:.4}), separation choice {:.4}",
            by_grid.search.sigma, by_grid.hsic_star, by_sep.sigma
        );
    }
    Ok(())
}
