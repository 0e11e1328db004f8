//! Seeded, parallel Monte Carlo checks of the transport identities.
//!
//! ```bash
//! cargo run --release --example monte_carlo
//! ```

use bures_wasserstein::coupling::{mc_orbit_cost, mc_pushforward_covariance};
use bures_wasserstein::random::{random_ensemble, random_orthogonal, random_spd, stream_rng};
use bures_wasserstein::{
    bures_distance, build_coupling, mc_coupling_value, mc_pair_cost, BarycenterConfig,
};

const SAMPLES: u64 = 1_000_000;
const SEED: u64 = 1;

fn main() -> bures_wasserstein::Result<()> {
    let mut rng = stream_rng(SEED, 0);
    let a = random_spd(&mut rng, 3);
    let b = random_spd(&mut rng, 3);
    let d2 = bures_distance(&a, &b)?.d.powi(2);

    let pair = mc_pair_cost(&a, &b, SAMPLES, SEED)?;
    println!("E‖x − Tx‖²  = {:.6} ± {:.6}   (d² = {d2:.6})", pair.mean, pair.std_error);

    let q = random_orthogonal(&mut rng, 3);
    let orbit = mc_orbit_cost(&a, &b, &q, SAMPLES, SEED)?;
    println!("random Q    = {:.6} ± {:.6}", orbit.mean, orbit.std_error);

    let cov = mc_pushforward_covariance(&a, &b, SAMPLES, SEED)?;
    println!("cov(Tx) max z-score against B: {:.2}", cov.max_z_score(b.matrix()));

    let (mats, w) = random_ensemble(&mut rng, 3, 2);
    let plan = build_coupling(&mats, &w, &BarycenterConfig::default())?;
    let value = mc_coupling_value(&plan, &w, SAMPLES, SEED)?;
    println!(
        "E‖Σ w_j x_j‖² = {:.6} ± {:.6}   (tr Ω = {:.6})",
        value.mean,
        value.std_error,
        plan.omega.trace()
    );

    let again = mc_pair_cost(&a, &b, SAMPLES, SEED)?;
    println!("rerun bit-identical: {}", again.mean.to_bits() == pair.mean.to_bits());
    Ok(())
}
