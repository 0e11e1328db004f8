//! Walking the geodesic between two covariances, and the non-monotone midpoint.

use bures_wasserstein::spd::loewner_gap;
use bures_wasserstein::{bures_distance, curve_length, geodesic, transport_map, wasserstein_mean, SpdMatrix};

fn main() -> bures_wasserstein::Result<()> {
    let a = SpdMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]])?;
    let b = SpdMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]])?;

    let t_map = transport_map(&a, &b)?;
    println!("transport map T = A⁻¹ # B =\n{}", t_map.matrix.matrix());
    println!("‖TAT − B‖ = {:.3e}", t_map.pushforward_residual());

    let path = geodesic(&a, &b)?;
    let d = bures_distance(&a, &b)?.d;
    println!("  t    d(A, γ(t))   t·d(A, B)");
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let dt = bures_distance(&a, &path.evaluate(t)?)?.d;
        println!("{t:5.2}  {dt:11.8}  {:11.8}", t * d);
    }
    println!("curve length (64-node quadrature) = {:.12}", curve_length(&path, 64)?);
    println!("d(A, B)                           = {d:.12}");

    let mid = wasserstein_mean(&a, &b)?;
    println!("A ◇ B =\n{}", mid.matrix());
    // the midpoint is not above A in the Loewner order
    println!("λ_min(A◇B − A) = {:.6}", loewner_gap(a.as_sym(), mid.as_sym())?);
    Ok(())
}
