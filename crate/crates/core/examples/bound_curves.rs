//! Tabulate the HSIC lower bound `L` against σ0 and its limits `L*` and `H*`
//! for a few class profiles.

use kdn::bounds::{lower_bound, lower_bound_3class, ClassProfile};
use kdn::sigsel::log_grid;

fn main() -> kdn::Result<()> {
    let sigma1 = 0.5;
    for counts in [vec![5, 5], vec![3, 7], vec![5, 5, 5]] {
        let profile = ClassProfile::signed(&counts)?;
        println!("counts {counts:?}, sigma1 {sigma1}");
        println!("  {:>10} {:>12} {:>12} {:>12}", "sigma0", "ub", "L", "L*");
        for s0 in log_grid(1e-3, 1.0, 7).into_iter().rev() {
            let b = lower_bound(&profile, s0, sigma1, 1.0, 1.0)?;
            println!("  {:>10.4} {:>12.4e} {:>12.5} {:>12.5}", b.sigma0, b.ub, b.l, b.l_star);
        }
        println!("  H* = {}", profile.h_star());
        if counts.len() == 3 {
            println!("  three-class limit {:.5}", lower_bound_3class(&profile, sigma1)?);
        }
    }
    Ok(())
}
