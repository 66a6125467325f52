//! Run the spectral iteration for one layer on the wine data and show how the
//! objective and the kept spectrum evolve.

use kdn::dataio::{load_csv, standardize, LabelColumn};
use kdn::ism::{fixed_point_residual, IsmProblem};
use kdn::kernelkit::{gamma_from_labels, GammaMode};
use kdn::IsmConfig;

fn main() -> kdn::Result<()> {
    let ds = load_csv(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv"),
        &LabelColumn::Name("class".into()),
    )?;
    let (z, _) = standardize(&ds)?;
    let gamma = gamma_from_labels(&z.labels, GammaMode::Centered)?;
    let problem = IsmProblem::new(&z.features, &gamma)?;
    for sigma in [1.0, 2.0, 4.0] {
        let res = problem.solve(sigma, &IsmConfig::default())?;
        let (resid, scale) = fixed_point_residual(&z.features, &gamma, sigma, &res)?;
        println!(
            "sigma {sigma}: q={} iters={} converged={} eigenvalues {:?}",
            res.w.ncols(),
            res.iters,
            res.converged,
            res.eigenvalues
        );
        let trace: Vec<String> = res.objective_trace.iter().take(8).map(|v| format!("{v:.2}")).collect();
        println!("  objective {} ...", trace.join(" "));
        println!("  fixed-point residual {:.2e}", resid / scale);
    }
    Ok(())
}
