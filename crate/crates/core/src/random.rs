//! Seeded generators for random test matrices and Monte Carlo streams.
//!
//! Every stream is a pure function of `(seed, stream)`: the ChaCha stream
//! id selects an independent substream, so parallel workers never share
//! generator state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spd::{SpdMatrix, SymMatrix};
use crate::weights::Weights;

/// Independent generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, z: &mut DVector<f64>) {
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// Eigenvalues drawn log-uniformly from `[lo, hi]` in a random orthonormal basis.
pub fn random_spd_in<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> SpdMatrix {
    let q = random_orthogonal(rng, n);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let values = DVector::from_fn(n, |_, _| (llo + (lhi - llo) * rng.random::<f64>()).exp());
    let m = &q * DMatrix::from_diagonal(&values) * q.transpose();
    SpdMatrix::new(m).expect("spectral construction is positive definite")
}

/// Random positive definite matrix with spectrum in `[0.1, 10]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SpdMatrix {
    random_spd_in(rng, n, 0.1, 10.0)
}

/// Random PSD matrix of the given rank (`rank ≤ n`).
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> SpdMatrix {
    let f = DMatrix::from_fn(n, rank.min(n), |_, _| rng.sample::<f64, _>(StandardNormal));
    SpdMatrix::new(&f * f.transpose()).expect("Gram matrix is PSD")
}

pub fn random_diagonal_spd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SpdMatrix {
    let d: Vec<f64> = (0..n).map(|_| 0.1 + 9.9 * rng.random::<f64>()).collect();
    SpdMatrix::from_diagonal(&d).expect("positive diagonal")
}

pub fn random_sym<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    SymMatrix::new((&g + g.transpose()) * 0.5).expect("symmetric by construction")
}

pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Weights {
    Weights::new((0..m).map(|_| 0.05 + rng.random::<f64>()).collect()).expect("positive weights")
}

/// A random PD ensemble of `m` matrices of size `n` with random weights.
pub fn random_ensemble<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> (Vec<SpdMatrix>, Weights) {
    let mats = (0..m).map(|_| random_spd(rng, n)).collect();
    (mats, random_weights(rng, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 0).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream_rng(7, 0).random()).collect();
        assert_eq!(a, b);
        let x: u64 = stream_rng(7, 0).random();
        let y: u64 = stream_rng(7, 1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = stream_rng(1, 0);
        for n in 1..6 {
            let q = random_orthogonal(&mut rng, n);
            assert!((q.transpose() * &q - DMatrix::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn generators_respect_their_spectra() {
        let mut rng = stream_rng(2, 0);
        let a = random_spd(&mut rng, 5);
        assert!(a.min_eigenvalue() >= 0.1 - 1e-9 && a.max_eigenvalue() <= 10.0 + 1e-9);
        let p = random_psd(&mut rng, 4, 2);
        assert!(!p.is_pd());
    }
}
