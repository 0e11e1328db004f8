//! Matrix geometric means and the Riccati equation they solve.

use bures_wasserstein::spd::loewner_gap;
use bures_wasserstein::{geometric_mean, weighted_geometric, SpdMatrix, SymMatrix};

fn main() -> bures_wasserstein::Result<()> {
    let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]])?;
    let b = SpdMatrix::from_rows(&[vec![5.0, -1.0], vec![-1.0, 1.0]])?;

    let g = geometric_mean(&a, &b)?;
    println!("A # B =\n{}", g.matrix());

    // X = A # B solves X A⁻¹ X = B
    let riccati = g.matrix() * a.inverse()?.matrix() * g.matrix() - b.matrix();
    println!("‖X A⁻¹ X − B‖ = {:.3e}", riccati.norm());

    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let gt = weighted_geometric(&a, &b, t)?;
        println!("A #_{t:<4} B: tr = {:.6}", gt.trace());
    }

    // harmonic ≤ geometric ≤ arithmetic in the Loewner order
    let harmonic = ((a.inverse()?.matrix() + b.inverse()?.matrix()) * 0.5).try_inverse().unwrap();
    let harmonic = SymMatrix::new((&harmonic + harmonic.transpose()) * 0.5)?;
    let arithmetic = SymMatrix::new((a.matrix() + b.matrix()) * 0.5)?;
    println!("λ_min(G − H) = {:.6}", loewner_gap(&harmonic, g.as_sym())?);
    println!("λ_min(M − G) = {:.6}", loewner_gap(g.as_sym(), &arithmetic)?);
    Ok(())
}
