//! Weighted barycentre of random covariances by fixed-point iteration.

use bures_wasserstein::barycenter::{arithmetic_mean, stationarity_defect};
use bures_wasserstein::random::{random_ensemble, stream_rng};
use bures_wasserstein::{barycenter, BarycenterConfig, SpdMatrix};

fn main() -> bures_wasserstein::Result<()> {
    let mut rng = stream_rng(42, 0);
    let (mats, w) = random_ensemble(&mut rng, 4, 3);

    let sol = barycenter(&mats, &w, &BarycenterConfig::default())?;
    println!("converged in {} iterations", sol.iterations);
    println!("Ω =\n{}", sol.omega.matrix());
    println!("  n   tr S_n          variance");
    for (i, (tr, v)) in sol.trace_sequence.iter().zip(&sol.variance_sequence).enumerate() {
        println!("{i:3}   {tr:.12}  {v:.12}");
    }
    println!("fixed-point residual = {:.3e}", sol.residual);
    println!("stationarity defect  = {:.3e}", stationarity_defect(&sol.omega, &mats, &w)?);

    // the barycentre is unique: a different start lands on the same Ω
    let restart = barycenter(
        &mats,
        &w,
        &BarycenterConfig::default().with_initial(SpdMatrix::identity(3)),
    )?;
    println!("restart gap = {:.3e}", (restart.omega.matrix() - sol.omega.matrix()).norm());

    let upper = arithmetic_mean(&mats, &w)?;
    println!("tr Ω = {:.6} ≤ tr Σ w_j A_j = {:.6}", sol.omega.trace(), upper.trace());
    Ok(())
}
