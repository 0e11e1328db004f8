//! Geodesics of the Bures-Wasserstein metric, optimal transport maps between
//! centred Gaussians, and the Riemannian inner product.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spd::{check_same_dim, geometric_mean, symmetrize, SpdMatrix, SymMatrix};

/// Default number of Gauss–Legendre nodes for [`curve_length`].
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

fn check_unit_interval(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            name: "t",
            value: t,
            range: "[0, 1]",
        })
    }
}

/// The optimal map `T = A⁻¹ # B` pushing covariance `A` to covariance `B`.
#[derive(Debug, Clone)]
pub struct TransportMap {
    pub matrix: SpdMatrix,
    pub source: SpdMatrix,
    pub target: SpdMatrix,
}

impl TransportMap {
    /// `‖T A T − B‖_F / ‖B‖_F`.
    pub fn pushforward_residual(&self) -> f64 {
        let pushed = self.matrix.congruence(self.source.matrix());
        crate::spd::relative_frobenius(&pushed, self.target.matrix())
    }
}

pub fn transport_map(a: &SpdMatrix, b: &SpdMatrix) -> Result<TransportMap> {
    a.require_pd()?;
    b.require_pd()?;
    check_same_dim(a.dim(), b.dim())?;
    let matrix = if a == b {
        SpdMatrix::identity(a.dim())
    } else {
        geometric_mean(&a.inverse()?, b)?
    };
    Ok(TransportMap {
        matrix,
        source: a.clone(),
        target: b.clone(),
    })
}

/// `(AB)^{1/2} + (BA)^{1/2}`, with `(AB)^{1/2} = A (A⁻¹ # B)`.
fn cross_term(a: &SpdMatrix, t: &SpdMatrix) -> SymMatrix {
    let ab_half = a.matrix() * t.matrix();
    SymMatrix::symmetrized(&(&ab_half + ab_half.transpose()))
}

/// `γ(t) = (1−t)² A + t² B + t(1−t) [(AB)^{1/2} + (BA)^{1/2}]`.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    a: SpdMatrix,
    b: SpdMatrix,
    cross_term: SymMatrix,
}

impl GeodesicPath {
    pub fn start(&self) -> &SpdMatrix {
        &self.a
    }

    pub fn end(&self) -> &SpdMatrix {
        &self.b
    }

    pub fn cross_term(&self) -> &SymMatrix {
        &self.cross_term
    }

    fn combine(&self, ca: f64, cb: f64, cc: f64) -> DMatrix<f64> {
        symmetrize(&(self.a.matrix() * ca + self.b.matrix() * cb + self.cross_term.matrix() * cc))
    }

    pub fn evaluate(&self, t: f64) -> Result<SpdMatrix> {
        check_unit_interval(t)?;
        if t == 0.0 {
            return Ok(self.a.clone());
        }
        if t == 1.0 {
            return Ok(self.b.clone());
        }
        let s = 1.0 - t;
        let point = SpdMatrix::from_computed(&self.combine(s * s, t * t, t * s))?;
        point.require_pd()?;
        Ok(point)
    }

    /// `γ′(t) = −2(1−t) A + 2t B + (1−2t) C`.
    pub fn velocity(&self, t: f64) -> Result<SymMatrix> {
        check_unit_interval(t)?;
        Ok(SymMatrix::symmetrized(&self.combine(
            -2.0 * (1.0 - t),
            2.0 * t,
            1.0 - 2.0 * t,
        )))
    }
}

pub fn geodesic(a: &SpdMatrix, b: &SpdMatrix) -> Result<GeodesicPath> {
    let t = transport_map(a, b)?;
    Ok(GeodesicPath {
        a: a.clone(),
        b: b.clone(),
        cross_term: cross_term(a, &t.matrix),
    })
}

/// `A ◇ B = ¼ (A + B + (AB)^{1/2} + (BA)^{1/2})`, the geodesic midpoint.
pub fn wasserstein_mean(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    geodesic(a, b)?.evaluate(0.5)
}

/// `⟨Y, Z⟩_A = Σ_{i,j} α_i y_ji z_ji / (α_i + α_j)²` with `y, z` expressed
/// in the eigenbasis of `A`.
pub fn riemannian_inner(a: &SpdMatrix, y: &SymMatrix, z: &SymMatrix) -> Result<f64> {
    a.require_pd()?;
    check_same_dim(a.dim(), y.dim())?;
    check_same_dim(a.dim(), z.dim())?;
    let q = a.spectral().eigenvectors();
    let alpha = a.spectral().eigenvalues();
    let yr = q.transpose() * y.matrix() * q;
    let zr = q.transpose() * z.matrix() * q;
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let denom = alpha[i] + alpha[j];
            sum += alpha[i] * yr[(j, i)] * zr[(j, i)] / (denom * denom);
        }
    }
    Ok(sum)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Tricomi-style estimate
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] → [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `∫₀¹ ⟨γ′(t), γ′(t)⟩^{1/2}_{γ(t)} dt` by Gauss–Legendre quadrature.
pub fn curve_length(path: &GeodesicPath, nodes: usize) -> Result<f64> {
    if nodes < 2 {
        return Err(Error::ParamOutOfRange {
            name: "nodes",
            value: nodes as f64,
            range: "[2, ∞)",
        });
    }
    if path.a == path.b {
        return Ok(0.0);
    }
    let (ts, ws) = gauss_legendre(nodes);
    let speeds = ts
        .par_iter()
        .map(|&t| {
            let point = path.evaluate(t)?;
            let v = path.velocity(t)?;
            Ok(riemannian_inner(&point, &v, &v)?.max(0.0).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(speeds.iter().zip(&ws).map(|(s, w)| s * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::{loewner_gap, relative_frobenius, sylvester_solve, RECON_TOL};
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn diag(d: &[f64]) -> SpdMatrix {
        SpdMatrix::from_diagonal(d).unwrap()
    }

    fn example_pair() -> (SpdMatrix, SpdMatrix) {
        (
            SpdMatrix::new(dmatrix![1.0, 1.0; 1.0, 2.0]).unwrap(),
            SpdMatrix::new(dmatrix![3.0, 1.0; 1.0, 2.0]).unwrap(),
        )
    }

    fn three_by_three() -> (SpdMatrix, SpdMatrix) {
        (
            SpdMatrix::new(dmatrix![4.0, 1.0, 0.5; 1.0, 3.0, 0.2; 0.5, 0.2, 2.0]).unwrap(),
            SpdMatrix::new(dmatrix![1.0, -0.3, 0.1; -0.3, 2.5, 0.7; 0.1, 0.7, 1.5]).unwrap(),
        )
    }

    #[test]
    fn transport_map_examples() {
        let (a, _) = example_pair();
        let t = transport_map(&a, &a).unwrap();
        assert_eq!(t.matrix.matrix(), &DMatrix::identity(2, 2));

        let t = transport_map(&diag(&[1.0, 4.0]), &diag(&[9.0, 16.0])).unwrap();
        assert_relative_eq!(t.matrix.matrix(), &dmatrix![3.0, 0.0; 0.0, 2.0], epsilon = 1e-12);

        let (a, b) = three_by_three();
        let t = transport_map(&a, &b).unwrap();
        assert!(t.pushforward_residual() <= 1e-9);
        let a_half = a.sqrt();
        let tr = a_half.congruence(t.matrix.matrix()).trace();
        assert_relative_eq!(tr, crate::metric::fidelity(&a, &b).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn geodesic_examples() {
        let (a, b) = example_pair();
        let path = geodesic(&a, &b).unwrap();
        assert_eq!(path.evaluate(0.0).unwrap(), a);
        assert_eq!(path.evaluate(1.0).unwrap(), b);
        assert!(matches!(path.evaluate(-0.1), Err(Error::ParamOutOfRange { .. })));

        let mid = geodesic(&diag(&[1.0, 4.0]), &diag(&[9.0, 16.0]))
            .unwrap()
            .evaluate(0.5)
            .unwrap();
        assert_relative_eq!(mid.matrix(), &dmatrix![4.0, 0.0; 0.0, 9.0], epsilon = 1e-12);

        let expected = dmatrix![1.8495, 1.0449; 1.0449, 1.9857];
        let got = path.evaluate(0.5).unwrap();
        assert!((got.matrix() - &expected).amax() <= 5e-4);
    }

    #[test]
    fn wasserstein_mean_examples() {
        let (a, b) = example_pair();
        assert!(relative_frobenius(wasserstein_mean(&a, &a).unwrap().matrix(), a.matrix()) <= 1e-15);
        let m = wasserstein_mean(&diag(&[1.0]), &diag(&[9.0])).unwrap();
        assert_relative_eq!(m.matrix()[(0, 0)], 4.0, epsilon = 1e-12);

        let ab = wasserstein_mean(&a, &b).unwrap();
        let ba = wasserstein_mean(&b, &a).unwrap();
        assert!(relative_frobenius(ab.matrix(), ba.matrix()) <= RECON_TOL);
        let mid = geodesic(&a, &b).unwrap().evaluate(0.5).unwrap();
        assert!((ab.matrix() - mid.matrix()).norm() <= 1e-12);

        // A ◇ B − A has a negative eigenvalue for this pair
        assert!(loewner_gap(a.as_sym(), ab.as_sym()).unwrap() < 0.0);
    }

    #[test]
    fn riemannian_inner_examples() {
        let y = SymMatrix::new(dmatrix![1.0, 2.0; 2.0, -3.0]).unwrap();
        let z = SymMatrix::new(dmatrix![0.5, -1.0; -1.0, 4.0]).unwrap();
        let at_identity = riemannian_inner(&SpdMatrix::identity(2), &y, &z).unwrap();
        assert_relative_eq!(at_identity, (y.matrix() * z.matrix()).trace() / 4.0, epsilon = 1e-14);

        let (a, b) = three_by_three();
        let y = SymMatrix::new(a.matrix() - b.matrix()).unwrap();
        let z = SymMatrix::new(dmatrix![1.0, 0.3, -0.2; 0.3, -0.5, 0.9; -0.2, 0.9, 2.0]).unwrap();
        assert!(riemannian_inner(&a, &y, &y).unwrap() > 0.0);

        // tr(KAH) with HA + AH = Y and KA + AK = Z
        let h = sylvester_solve(&a, &y).unwrap();
        let k = sylvester_solve(&a, &z).unwrap();
        let dual = (k.matrix() * a.matrix() * h.matrix()).trace();
        assert_relative_eq!(riemannian_inner(&a, &y, &z).unwrap(), dual, epsilon = 1e-10);
        assert_relative_eq!(
            riemannian_inner(&a, &y, &z).unwrap(),
            riemannian_inner(&a, &z, &y).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gauss_legendre_is_exact_for_low_degree() {
        for n in [2usize, 3, 7, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for deg in 0..(2 * n).min(40) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert_relative_eq!(got, 1.0 / (deg as f64 + 1.0), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn curve_length_examples() {
        let (a, b) = example_pair();
        assert_eq!(curve_length(&geodesic(&a, &a).unwrap(), 64).unwrap(), 0.0);

        let len = curve_length(&geodesic(&diag(&[1.0, 4.0]), &diag(&[9.0, 16.0])).unwrap(), 64);
        assert_relative_eq!(len.unwrap(), 2.82842712474619, epsilon = 1e-6);

        let d = crate::metric::bures_distance(&a, &b).unwrap().d;
        let len = curve_length(&geodesic(&a, &b).unwrap(), 64).unwrap();
        assert_relative_eq!(len, d, epsilon = 1e-6);

        assert!(matches!(
            curve_length(&geodesic(&a, &b).unwrap(), 1),
            Err(Error::ParamOutOfRange { .. })
        ));
    }
}
