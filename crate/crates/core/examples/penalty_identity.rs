//! Check the per-sample penalty decomposition of the layer objective on a
//! random problem.

use kdn::kernelkit::{gamma_from_labels, GammaMode};
use kdn::metrics::penalty_terms;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> kdn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, d, q) = (30, 5, 2);
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let r = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let w = DMatrix::from_fn(d, q, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
    let gamma = gamma_from_labels(&labels, GammaMode::Centered)?;
    let sigma = rng.gen_range(0.5..2.0);
    let p = penalty_terms(&r, &w, sigma, &gamma.values, &labels)?;
    println!("sigma {sigma:.4}");
    println!("trace form {:.12}", p.trace_form);
    println!("pair form  {:.12}", p.pair_form);
    println!("relative residual {:.3e}", p.relative_residual());
    println!("mean D_i {:.6}", p.mean_d());
    Ok(())
}
