//! The Bures-Wasserstein distance, fidelity, and the comparison distances.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spd::{
    check_same_dim, geometric_mean, polar_unitary, relative_frobenius, SpdMatrix, RECON_TOL,
};

/// Slack below zero tolerated in `tr A + tr B − 2F` before it is reported
/// as corrupted rather than clamped.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

/// Relative tolerance used by the variational fidelity clauses.
pub const VARIATIONAL_TOL: f64 = 1e-9;

/// Below this fraction of `tr A + tr B`, the squared distance is recomputed
/// from the Procrustes residual, which has no cancellation.
const CANCELLATION_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceReport {
    pub d: f64,
    pub fidelity: f64,
    pub trace_a: f64,
    pub trace_b: f64,
}

/// `tr (A^{1/2} B A^{1/2})^{1/2}` for PSD arguments, evaluated as the sum of
/// the singular values of `A^{1/2} B^{1/2}`.
pub fn fidelity(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    if a == b {
        return Ok(a.trace());
    }
    let product = a.sqrt().matrix() * b.sqrt().matrix();
    Ok(product.singular_values().sum())
}

/// `‖A^{1/2} − B^{1/2} Q‖_F` for any square `Q`.
pub fn procrustes_residual(a: &SpdMatrix, b: &SpdMatrix, q: &DMatrix<f64>) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    check_same_dim(a.dim(), q.nrows())?;
    Ok((a.sqrt().matrix() - b.sqrt().matrix() * q).norm())
}

/// `d(A,B) = [tr A + tr B − 2 tr(A^{1/2} B A^{1/2})^{1/2}]^{1/2}`.
pub fn bures_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<DistanceReport> {
    let fid = fidelity(a, b)?;
    let (trace_a, trace_b) = (a.trace(), b.trace());
    let scale = trace_a + trace_b;
    let bracket = scale - 2.0 * fid;
    if bracket < -DISCRIMINANT_TOL * scale.max(1.0) {
        return Err(Error::NegativeDiscriminant(bracket));
    }
    let d = if a == b {
        0.0
    } else if bracket <= CANCELLATION_GUARD * scale && a.is_pd() && b.is_pd() {
        let u = polar_unitary(a, b)?;
        procrustes_residual(a, b, u.matrix())?
    } else {
        bracket.max(0.0).sqrt()
    };
    Ok(DistanceReport {
        d,
        fidelity: fid,
        trace_a,
        trace_b,
    })
}

/// The Hellinger distance `‖A^{1/2} − B^{1/2}‖_F`.
pub fn hellinger(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    Ok((a.sqrt().matrix() - b.sqrt().matrix()).norm())
}

/// The affine-invariant distance `‖log A^{-1/2} B A^{-1/2}‖_F`.
pub fn affine_invariant_delta(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    a.require_pd()?;
    b.require_pd()?;
    check_same_dim(a.dim(), b.dim())?;
    let conj = SpdMatrix::from_computed(&a.inv_sqrt()?.congruence(b.matrix()))?;
    conj.require_pd()?;
    let sum_sq: f64 = conj
        .spectral()
        .eigenvalues()
        .iter()
        .map(|mu| mu.ln().powi(2))
        .sum();
    Ok(sum_sq.sqrt())
}

/// One clause of [`fidelity_variational_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub passed: bool,
    /// Observed defect, in the units the tolerance is stated in.
    pub defect: f64,
    pub tolerance: f64,
}

impl Clause {
    fn new(name: &'static str, defect: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: defect <= tolerance,
            defect,
            tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub fidelity: f64,
    /// `X₀ = A^{-1} # B`.
    pub minimizer: SpdMatrix,
    pub clauses: Vec<Clause>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.passed)
    }
}

/// Evaluates the three variational characterizations of the fidelity at the
/// closed-form optimizers and checks that no probe does better.
///
/// Clauses:
/// - `min_half_trace`: `½ tr(AX₀ + BX₀⁻¹) = F`
/// - `min_geometric`: `√(tr AX₀ · tr BX₀⁻¹) = F`
/// - `balanced_traces`: `tr AX₀ = tr BX₀⁻¹ = F`
/// - `probes_dominated`: every probe `X` has `½ tr(AX + BX⁻¹) ≥ F` and
///   `√(tr AX · tr BX⁻¹) ≥ F`
/// - `max_attained_constraint`, `max_attained_trace`: `M = A(A⁻¹ # B)`
///   has `M B⁻¹ Mᵀ = A` and `tr M = F`
pub fn fidelity_variational_check(
    a: &SpdMatrix,
    b: &SpdMatrix,
    probes: &[SpdMatrix],
) -> Result<CheckReport> {
    a.require_pd()?;
    b.require_pd()?;
    check_same_dim(a.dim(), b.dim())?;
    for p in probes {
        p.require_pd()?;
        check_same_dim(a.dim(), p.dim())?;
    }
    let f = fidelity(a, b)?;
    let rel = |x: f64| (x - f).abs() / f.max(f64::MIN_POSITIVE);

    let x0 = geometric_mean(&a.inverse()?, b)?;
    let x0_inv = x0.inverse()?;
    let tr_ax = (a.matrix() * x0.matrix()).trace();
    let tr_bx = (b.matrix() * x0_inv.matrix()).trace();

    let mut clauses = vec![
        Clause::new("min_half_trace", rel(0.5 * (tr_ax + tr_bx)), VARIATIONAL_TOL),
        Clause::new("min_geometric", rel((tr_ax * tr_bx).sqrt()), VARIATIONAL_TOL),
        Clause::new("balanced_traces", rel(tr_ax).max(rel(tr_bx)), VARIATIONAL_TOL),
    ];

    // worst (most negative) margin over probes, relative to F
    let worst = probes
        .par_iter()
        .map(|x| -> Result<f64> {
            let x_inv = x.inverse()?;
            let tax = (a.matrix() * x.matrix()).trace();
            let tbx = (b.matrix() * x_inv.matrix()).trace();
            let margin = (0.5 * (tax + tbx)).min((tax * tbx).sqrt()) - f;
            Ok(margin / f.max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0_f64, f64::min);
    clauses.push(Clause::new("probes_dominated", -worst, VARIATIONAL_TOL));

    let m = a.matrix() * x0.matrix();
    let b_inv = b.inverse()?;
    let recovered = &m * b_inv.matrix() * m.transpose();
    let attain = relative_frobenius(&recovered, a.matrix());
    clauses.push(Clause::new("max_attained_constraint", attain, RECON_TOL));
    clauses.push(Clause::new("max_attained_trace", rel(m.trace()), VARIATIONAL_TOL));

    Ok(CheckReport {
        fidelity: f,
        minimizer: x0,
        clauses,
    })
}
