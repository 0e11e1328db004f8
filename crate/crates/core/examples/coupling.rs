//! Optimal joint Gaussian coupling of several marginals.

use bures_wasserstein::random::{random_ensemble, stream_rng};
use bures_wasserstein::{build_coupling, BarycenterConfig};

fn main() -> bures_wasserstein::Result<()> {
    let mut rng = stream_rng(7, 0);
    let (mats, w) = random_ensemble(&mut rng, 3, 2);
    let plan = build_coupling(&mats, &w, &BarycenterConfig::default())?;

    println!("barycentre Ω =\n{}", plan.omega.matrix());
    for (j, r) in plan.r_maps.iter().enumerate() {
        println!("R_{} =\n{}", j + 1, r.matrix());
    }
    for (j, m) in plan.pair_maps.iter().enumerate() {
        println!("x_{} = M x_1 with M =\n{m}", j + 2);
    }
    println!("optimal value tr Ω  = {:.12}", plan.optimal_value);
    println!("‖Σ w_j R_j⁻¹ − I‖   = {:.3e}", plan.identity_defect(&w)?);
    println!("pushforward defect = {:.3e}", plan.pushforward_defect());
    Ok(())
}
