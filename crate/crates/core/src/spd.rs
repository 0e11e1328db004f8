//! Validated symmetric and positive (semi)definite matrices, plus the
//! spectral primitives the rest of the crate is built on.
//!
//! Every fractional power is taken through a symmetric eigendecomposition.
//! Outputs are symmetrized with `(M + Mᵀ)/2` before they are returned.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::weights::Weights;

/// Relative Frobenius tolerance used by every reconstruction contract.
pub const RECON_TOL: f64 = 1e-9;

/// Largest relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` accepted on input.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Eigenvalues below this are treated as zero (or as a failure when an
/// inverse is needed). Scales with the spectrum, floored at 1.
pub fn pd_threshold(max_eigenvalue: f64) -> f64 {
    1e-12 * max_eigenvalue.max(1.0)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}

/// Relative Frobenius distance `‖a − b‖_F / max(‖b‖_F, tiny)`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    for row in rows {
        if row.len() != n {
            return Err(Error::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// A dense real symmetric matrix: a tangent vector of the SPD manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates squareness, finiteness and (approximate) symmetry, then
    /// symmetrizes exactly.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = m.norm();
        if norm > 0.0 {
            let asym = (&m - m.transpose()).norm() / norm;
            if asym > SYMMETRY_TOL {
                return Err(Error::NotSymmetric(asym));
            }
        }
        Ok(Self(symmetrize(&m)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    /// Symmetrizes without validation. Callers guarantee a square, finite
    /// input that is symmetric up to rounding.
    pub(crate) fn symmetrized(m: &DMatrix<f64>) -> Self {
        Self(symmetrize(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn eigen(&self) -> SpectralDecomposition {
        SpectralDecomposition::of(&self.0)
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigen().min_eigenvalue()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl AsRef<DMatrix<f64>> for SymMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigenvalues in nonincreasing order with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn of(m: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(m.clone());
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `Q f(Λ) Qᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= f(lambda);
        }
        symmetrize(&(scaled * q.transpose()))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map(|x| x)
    }

    /// `‖QΛQᵀ − A‖_F / ‖A‖_F`.
    pub fn reconstruction_error(&self, original: &DMatrix<f64>) -> f64 {
        relative_frobenius(&self.reconstruct(), original)
    }

    /// `‖QᵀQ − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n)).norm()
    }

    fn clamp_small_negatives(&mut self, threshold: f64) {
        for v in self.eigenvalues.iter_mut() {
            if *v < 0.0 && *v >= -threshold {
                *v = 0.0;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
}

/// A symmetric positive semidefinite matrix with its eigendecomposition
/// cached. Eigenvalues within `pd_threshold` below zero are clamped to zero.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    sym: SymMatrix,
    spectral: SpectralDecomposition,
    definiteness: Definiteness,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.sym == other.sym
    }
}

impl SpdMatrix {
    /// Validates a PSD matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::from_sym(SymMatrix::new(m)?)
    }

    /// Validates a strictly positive definite matrix.
    pub fn new_pd(m: DMatrix<f64>) -> Result<Self> {
        let a = Self::new(m)?;
        a.require_pd()?;
        Ok(a)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_rows(rows)?)
    }

    pub fn from_sym(sym: SymMatrix) -> Result<Self> {
        let mut spectral = sym.eigen();
        let threshold = pd_threshold(spectral.max_eigenvalue());
        let min = spectral.min_eigenvalue();
        if min < -threshold {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                threshold,
            });
        }
        spectral.clamp_small_negatives(threshold);
        let definiteness = if min >= threshold {
            Definiteness::PositiveDefinite
        } else {
            Definiteness::PositiveSemidefinite
        };
        Ok(Self {
            sym,
            spectral,
            definiteness,
        })
    }

    /// Builds `Q diag(values) Qᵀ` keeping `Q` as the cached eigenbasis.
    /// `values` must be nonnegative and `Q` orthogonal.
    fn from_spectral(eigenvectors: DMatrix<f64>, eigenvalues: DVector<f64>) -> Self {
        // reorder to keep the nonincreasing invariant (maps like x^-1 reverse it)
        let n = eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
        let spectral = SpectralDecomposition {
            eigenvalues: DVector::from_iterator(n, order.iter().map(|&i| eigenvalues[i])),
            eigenvectors: DMatrix::from_fn(n, n, |r, c| eigenvectors[(r, order[c])]),
        };
        let sym = SymMatrix(spectral.reconstruct());
        let threshold = pd_threshold(spectral.max_eigenvalue());
        let definiteness = if spectral.min_eigenvalue() >= threshold {
            Definiteness::PositiveDefinite
        } else {
            Definiteness::PositiveSemidefinite
        };
        Self {
            sym,
            spectral,
            definiteness,
        }
    }

    /// Validates a matrix produced internally from PSD algebra. Only
    /// squareness/finiteness of inputs has been established upstream.
    pub(crate) fn from_computed(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_sym(SymMatrix::symmetrized(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_spectral(DMatrix::identity(dim, dim), DVector::from_element(dim, 1.0))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.sym.matrix()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn definiteness(&self) -> Definiteness {
        self.definiteness
    }

    pub fn is_pd(&self) -> bool {
        self.definiteness == Definiteness::PositiveDefinite
    }

    pub fn trace(&self) -> f64 {
        self.sym.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectral.min_eigenvalue()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.spectral.max_eigenvalue()
    }

    /// Ratio of extreme eigenvalues; infinite for singular matrices.
    pub fn condition_number(&self) -> f64 {
        let min = self.min_eigenvalue();
        if min > 0.0 {
            self.max_eigenvalue() / min
        } else {
            f64::INFINITY
        }
    }

    pub fn require_pd(&self) -> Result<&Self> {
        if self.is_pd() {
            Ok(self)
        } else {
            Err(Error::NotPd {
                min_eigenvalue: self.min_eigenvalue(),
                threshold: pd_threshold(self.max_eigenvalue()),
            })
        }
    }

    /// `A^p`. Negative powers require a positive definite matrix.
    pub fn power(&self, p: f64) -> Result<Self> {
        if p < 0.0 {
            self.require_pd()?;
        }
        if p == 0.0 {
            return Ok(Self::identity(self.dim()));
        }
        let values = self.spectral.eigenvalues.map(|x| if x == 0.0 { 0.0 } else { x.powf(p) });
        Ok(Self::from_spectral(self.spectral.eigenvectors.clone(), values))
    }

    pub fn sqrt(&self) -> Self {
        let values = self.spectral.eigenvalues.map(f64::sqrt);
        Self::from_spectral(self.spectral.eigenvectors.clone(), values)
    }

    pub fn inverse(&self) -> Result<Self> {
        self.power(-1.0)
    }

    pub fn inv_sqrt(&self) -> Result<Self> {
        self.power(-0.5)
    }

    /// `A X A` for this (symmetric) `A`, symmetrized.
    pub fn congruence(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let a = self.matrix();
        symmetrize(&(a * x * a))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.sym.to_rows()
    }
}

impl AsRef<DMatrix<f64>> for SpdMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        self.matrix()
    }
}

/// An orthogonal matrix, `UᵀU = I` up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(DMatrix<f64>);

impl OrthogonalMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `‖UᵀU − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.0.nrows();
        (self.0.transpose() * &self.0 - DMatrix::identity(n, n)).norm()
    }
}

/// The unique PSD square root.
pub fn sqrt_psd(a: &SpdMatrix) -> SpdMatrix {
    a.sqrt()
}

/// `A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`, shared by both means below.
fn geometric_interpolant(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    a.require_pd()?;
    b.require_pd()?;
    check_same_dim(a.dim(), b.dim())?;
    let a_half = a.sqrt();
    let a_inv_half = a.inv_sqrt()?;
    let inner = SpdMatrix::from_computed(&a_inv_half.congruence(b.matrix()))?;
    let inner_t = inner.power(t)?;
    SpdMatrix::from_computed(&a_half.congruence(inner_t.matrix()))
}

/// The matrix geometric mean `A # B`.
pub fn geometric_mean(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    if a == b {
        a.require_pd()?;
        return Ok(a.clone());
    }
    geometric_interpolant(a, b, 0.5)
}

/// `A #_t B`, the point at parameter `t` on the affine-invariant geodesic.
pub fn weighted_geometric(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParamOutOfRange {
            name: "t",
            value: t,
            range: "[0, 1]",
        });
    }
    a.require_pd()?;
    b.require_pd()?;
    check_same_dim(a.dim(), b.dim())?;
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    geometric_interpolant(a, b, t)
}

/// Solves `HA + AH = Y` in the eigenbasis of `A`: `h_ij = y_ij / (α_i + α_j)`.
pub fn sylvester_solve(a: &SpdMatrix, y: &SymMatrix) -> Result<SymMatrix> {
    a.require_pd()?;
    check_same_dim(a.dim(), y.dim())?;
    let q = a.spectral().eigenvectors();
    let alpha = a.spectral().eigenvalues();
    let mut rotated = q.transpose() * y.matrix() * q;
    let n = a.dim();
    for j in 0..n {
        for i in 0..n {
            rotated[(i, j)] /= alpha[i] + alpha[j];
        }
    }
    Ok(SymMatrix::symmetrized(&(q * rotated * q.transpose())))
}

/// The orthogonal factor `U` of the polar decomposition
/// `B^{1/2} A^{1/2} = U (A^{1/2} B A^{1/2})^{1/2}`.
pub fn polar_unitary(a: &SpdMatrix, b: &SpdMatrix) -> Result<OrthogonalMatrix> {
    a.require_pd()?;
    b.require_pd()?;
    check_same_dim(a.dim(), b.dim())?;
    let a_half = a.sqrt();
    let b_half = b.sqrt();
    let middle = SpdMatrix::from_computed(&a_half.congruence(b.matrix()))?;
    let middle_inv_half = middle.inv_sqrt()?;
    let u = b_half.matrix() * a_half.matrix() * middle_inv_half.matrix();
    Ok(OrthogonalMatrix(u))
}

/// Smallest eigenvalue of `B − A`; nonnegative iff `A ≤ B` in the Loewner order.
pub fn loewner_gap(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    let diff = SymMatrix::symmetrized(&(b.matrix() - a.matrix()));
    Ok(diff.smallest_eigenvalue())
}

/// `A ≤ B` in the Loewner order, up to an absolute eigenvalue slack.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, slack: f64) -> Result<bool> {
    Ok(loewner_gap(a, b)? >= -slack)
}

/// The power mean `Q_{1/2} = (Σ w_j A_j^{1/2})²`.
pub fn power_mean_half(mats: &[SpdMatrix], w: &Weights) -> Result<SpdMatrix> {
    let first = mats.first().ok_or(Error::EmptyEnsemble)?;
    if mats.len() != w.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} matrices",
            w.len(),
            mats.len()
        )));
    }
    let n = first.dim();
    let mut sum = DMatrix::zeros(n, n);
    for (a, &wj) in mats.iter().zip(w.values()) {
        a.require_pd()?;
        check_same_dim(n, a.dim())?;
        sum += a.sqrt().matrix() * wj;
    }
    SpdMatrix::from_computed(&(&sum * &sum))
}
