//! Distance, fidelity and their relatives for a pair of covariance matrices.
//!
//! ```bash
//! cargo run --example distance
//! ```

use bures_wasserstein::{affine_invariant_delta, bures_distance, hellinger, polar_unitary, SpdMatrix};

fn main() -> bures_wasserstein::Result<()> {
    let a = SpdMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]])?;
    let b = SpdMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]])?;

    let report = bures_distance(&a, &b)?;
    println!("d(A, B)        = {:.12}", report.d);
    println!("fidelity F     = {:.12}", report.fidelity);
    println!("tr A, tr B     = {}, {}", report.trace_a, report.trace_b);

    // the distance is attained by the polar factor U in ‖A^{1/2} − B^{1/2} U‖
    let u = polar_unitary(&a, &b)?;
    let residual = (a.sqrt().matrix() - b.sqrt().matrix() * u.matrix()).norm();
    println!("Procrustes     = {residual:.12}");

    println!("Hellinger      = {:.12}", hellinger(&a, &b)?);
    println!("affine δ       = {:.12}", affine_invariant_delta(&a, &b)?);

    // commuting matrices: d reduces to the Hellinger distance
    let c = SpdMatrix::from_diagonal(&[1.0, 4.0])?;
    let d = SpdMatrix::from_diagonal(&[9.0, 16.0])?;
    println!(
        "diag(1,4) vs diag(9,16): d = {:.16}, Hellinger = {:.16}",
        bures_distance(&c, &d)?.d,
        hellinger(&c, &d)?
    );
    Ok(())
}
