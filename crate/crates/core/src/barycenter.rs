//! The Wasserstein barycentre `Ω = argmin Σ w_j d²(X, A_j)` computed with
//! the fixed-point iteration `S_{n+1} = K(S_n)`.
//!
//! Convergence is declared only when both the relative step
//! `‖S_{n+1} − S_n‖_F / ‖S_n‖_F` and the fixed-point residual
//! `‖S − Σ w_j (S^{1/2} A_j S^{1/2})^{1/2}‖_F / ‖S‖_F` fall below `tol`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::transport_map;
use crate::metric::{bures_distance, fidelity};
use crate::spd::{check_same_dim, relative_frobenius, SpdMatrix, RECON_TOL};
use crate::weights::Weights;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;

/// Eigenvalue ratio above which a solution is flagged as ill-conditioned.
pub const CONDITIONING_LIMIT: f64 = 1e12;

/// Slack (relative to `max(1, |value|)`) for the monotone trace and
/// variance sequences.
pub const MONOTONE_SLACK: f64 = 1e-12;

// inner square roots are farmed out to rayon only above this dimension
const PARALLEL_DIM: usize = 32;

#[derive(Debug, Clone)]
pub struct BarycenterConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point; the weighted arithmetic mean when absent.
    pub initial: Option<SpdMatrix>,
    /// Keep every iterate in [`BarycenterSolution::iterates`].
    pub record_iterates: bool,
}

impl Default for BarycenterConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            initial: None,
            record_iterates: false,
        }
    }
}

impl BarycenterConfig {
    pub fn with_initial(mut self, initial: SpdMatrix) -> Self {
        self.initial = Some(initial);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::ParamOutOfRange {
                name: "tol",
                value: self.tol,
                range: "(0, ∞)",
            });
        }
        if self.max_iter == 0 {
            return Err(Error::ParamOutOfRange {
                name: "max_iter",
                value: 0.0,
                range: "[1, ∞)",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BarycenterSolution {
    pub omega: SpdMatrix,
    /// Number of applications of `K`.
    pub iterations: usize,
    /// `tr S_n` for every visited iterate, starting at `S_0`.
    pub trace_sequence: Vec<f64>,
    /// `V(S_n)` for every visited iterate.
    pub variance_sequence: Vec<f64>,
    /// `d(S_n, S_{n+1})`.
    pub step_distances: Vec<f64>,
    /// `‖S_{n+1} − S_n‖_F / ‖S_n‖_F`.
    pub relative_steps: Vec<f64>,
    /// Fixed-point residual at `omega`.
    pub residual: f64,
    /// `‖I − Σ w_j (A_j # Ω⁻¹)‖_F`, the gradient condition at `omega`.
    pub stationarity: f64,
    pub converged: bool,
    /// Some `A_j` has eigenvalue ratio above [`CONDITIONING_LIMIT`].
    pub ill_conditioned: bool,
    pub iterates: Vec<SpdMatrix>,
}

impl BarycenterSolution {
    /// `tr S_n ≤ tr S_{n+1}` for `n ≥ 1`.
    pub fn trace_nondecreasing(&self) -> bool {
        self.trace_sequence
            .iter()
            .skip(1)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| *w[1] >= *w[0] - MONOTONE_SLACK * w[0].abs().max(1.0))
    }

    /// `V(S_n) ≥ V(S_{n+1})` for all `n`.
    pub fn variance_nonincreasing(&self) -> bool {
        self.variance_sequence
            .windows(2)
            .all(|w| w[1] <= w[0] + MONOTONE_SLACK * w[0].abs().max(1.0))
    }
}

fn validate_ensemble(mats: &[SpdMatrix], w: &Weights) -> Result<usize> {
    let first = mats.first().ok_or(Error::EmptyEnsemble)?;
    w.ensure_len(mats.len())?;
    let n = first.dim();
    for a in mats {
        a.require_pd()?;
        check_same_dim(n, a.dim())?;
    }
    Ok(n)
}

/// `Σ w_j A_j`.
pub fn arithmetic_mean(mats: &[SpdMatrix], w: &Weights) -> Result<SpdMatrix> {
    let n = mats.first().ok_or(Error::EmptyEnsemble)?.dim();
    w.ensure_len(mats.len())?;
    let mut sum = DMatrix::zeros(n, n);
    for (a, &wj) in mats.iter().zip(w.values()) {
        check_same_dim(n, a.dim())?;
        sum += a.matrix() * wj;
    }
    SpdMatrix::from_computed(&sum)
}

/// `H_j(A) = A⁻¹ # A_j`, the optimal map from `A` to `A_j`.
pub fn map_h(a: &SpdMatrix, target: &SpdMatrix) -> Result<SpdMatrix> {
    Ok(transport_map(a, target)?.matrix)
}

struct KStep {
    /// `Σ w_j (S^{1/2} A_j S^{1/2})^{1/2}`
    root_sum: DMatrix<f64>,
    next: SpdMatrix,
}

fn k_step(s: &SpdMatrix, mats: &[SpdMatrix], w: &Weights) -> Result<KStep> {
    let s_half = s.sqrt();
    let s_inv_half = s.inv_sqrt()?;
    let root = |a: &SpdMatrix| -> Result<DMatrix<f64>> {
        let inner = SpdMatrix::from_computed(&s_half.congruence(a.matrix()))?;
        Ok(inner.sqrt().matrix().clone())
    };
    let roots: Vec<DMatrix<f64>> = if s.dim() >= PARALLEL_DIM {
        mats.par_iter().map(root).collect::<Result<_>>()?
    } else {
        mats.iter().map(root).collect::<Result<_>>()?
    };
    // ascending-index reduction keeps the sum independent of scheduling
    let n = s.dim();
    let mut root_sum = DMatrix::zeros(n, n);
    for (r, &wj) in roots.iter().zip(w.values()) {
        root_sum += r * wj;
    }
    let next = SpdMatrix::from_computed(&s_inv_half.congruence(&(&root_sum * &root_sum)))?;
    next.require_pd()?;
    Ok(KStep { root_sum, next })
}

/// `K(A) = A^{-1/2} (Σ w_j (A^{1/2} A_j A^{1/2})^{1/2})² A^{-1/2}`,
/// cross-checked against `H(A) A H(A)` with `H = Σ w_j H_j`.
pub fn map_k(a: &SpdMatrix, mats: &[SpdMatrix], w: &Weights) -> Result<SpdMatrix> {
    a.require_pd()?;
    let n = validate_ensemble(mats, w)?;
    check_same_dim(n, a.dim())?;
    let k = k_step(a, mats, w)?.next;

    let mut h = DMatrix::zeros(n, n);
    for (aj, &wj) in mats.iter().zip(w.values()) {
        h += map_h(a, aj)?.matrix() * wj;
    }
    let via_h = &h * a.matrix() * &h;
    let defect = relative_frobenius(&via_h, k.matrix());
    if defect > RECON_TOL {
        return Err(Error::Inconsistent {
            what: "K(A) disagrees with H(A) A H(A)",
            defect,
        });
    }
    Ok(k)
}

/// `V(A) = Σ w_j d²(A, A_j)`.
pub fn variance(a: &SpdMatrix, mats: &[SpdMatrix], w: &Weights) -> Result<f64> {
    mats.first().ok_or(Error::EmptyEnsemble)?;
    w.ensure_len(mats.len())?;
    let mut v = 0.0;
    for (aj, &wj) in mats.iter().zip(w.values()) {
        let d = bures_distance(a, aj)?.d;
        v += wj * d * d;
    }
    Ok(v)
}

/// `Σ w_j tr(A_j^{1/2} K(A) A_j^{1/2})^{1/2} − tr K(A)`, nonnegative by the
/// variance inequality.
pub fn k_trace_gap(a: &SpdMatrix, mats: &[SpdMatrix], w: &Weights) -> Result<f64> {
    let k = map_k(a, mats, w)?;
    let mut lhs = 0.0;
    for (aj, &wj) in mats.iter().zip(w.values()) {
        lhs += wj * fidelity(aj, &k)?;
    }
    Ok(lhs - k.trace())
}

/// `‖I − Σ w_j (A_j # Ω⁻¹)‖_F`.
pub fn stationarity_defect(omega: &SpdMatrix, mats: &[SpdMatrix], w: &Weights) -> Result<f64> {
    let n = validate_ensemble(mats, w)?;
    check_same_dim(n, omega.dim())?;
    let mut sum = DMatrix::identity(n, n);
    for (aj, &wj) in mats.iter().zip(w.values()) {
        sum -= map_h(omega, aj)?.matrix() * wj;
    }
    Ok(sum.norm())
}

pub fn barycenter(
    mats: &[SpdMatrix],
    w: &Weights,
    cfg: &BarycenterConfig,
) -> Result<BarycenterSolution> {
    cfg.validate()?;
    let n = validate_ensemble(mats, w)?;
    let ill_conditioned = mats
        .iter()
        .any(|a| a.condition_number() > CONDITIONING_LIMIT);

    if mats.len() == 1 {
        let omega = mats[0].clone();
        return Ok(BarycenterSolution {
            trace_sequence: vec![omega.trace()],
            variance_sequence: vec![0.0],
            step_distances: Vec::new(),
            relative_steps: Vec::new(),
            residual: 0.0,
            stationarity: 0.0,
            converged: true,
            ill_conditioned,
            iterations: 0,
            iterates: if cfg.record_iterates {
                vec![omega.clone()]
            } else {
                Vec::new()
            },
            omega,
        });
    }

    let mut s = match &cfg.initial {
        Some(init) => {
            init.require_pd()?;
            check_same_dim(n, init.dim())?;
            init.clone()
        }
        None => arithmetic_mean(mats, w)?,
    };
    let weighted_traces: f64 = mats
        .iter()
        .zip(w.values())
        .map(|(a, &wj)| wj * a.trace())
        .sum();

    let mut trace_sequence = Vec::new();
    let mut variance_sequence = Vec::new();
    let mut step_distances = Vec::new();
    let mut relative_steps: Vec<f64> = Vec::new();
    let mut iterates = Vec::new();
    let mut iteration = 0;
    loop {
        let step = k_step(&s, mats, w)?;
        let tr_s = s.trace();
        let tr_roots = step.root_sum.trace();
        trace_sequence.push(tr_s);
        variance_sequence.push((tr_s + weighted_traces - 2.0 * tr_roots).max(0.0));
        if cfg.record_iterates {
            iterates.push(s.clone());
        }
        let residual = relative_frobenius(&step.root_sum, s.matrix());
        let step_small = relative_steps.last().is_some_and(|&r| r <= cfg.tol);
        let converged = step_small && residual <= cfg.tol;
        if converged || iteration == cfg.max_iter {
            let stationarity = stationarity_defect(&s, mats, w)?;
            let solution = BarycenterSolution {
                omega: s,
                iterations: iteration,
                trace_sequence,
                variance_sequence,
                step_distances,
                relative_steps,
                residual,
                stationarity,
                converged,
                ill_conditioned,
                iterates,
            };
            return if converged {
                Ok(solution)
            } else {
                Err(Error::NotConverged(Box::new(solution)))
            };
        }
        let next = step.next;
        // d²(S, K(S)) = tr S + tr K(S) − 2 tr S^{1/2} H(S) S^{1/2}
        step_distances.push((tr_s + next.trace() - 2.0 * tr_roots).max(0.0).sqrt());
        relative_steps.push(relative_frobenius(next.matrix(), s.matrix()));
        s = next;
        iteration += 1;
    }
}
