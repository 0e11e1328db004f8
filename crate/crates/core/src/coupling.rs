//! Optimal couplings of several centred Gaussians and a seeded Monte Carlo
//! harness for the expectation identities behind them.
//!
//! With `Ω` the barycentre and `R_j = Ω⁻¹ # A_j`, drawing `x₁ ~ N(0, A₁)` and
//! setting `x_j = R_j R₁⁻¹ x₁` maximizes `E‖Σ w_j x_j‖²` with value `tr Ω`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::barycenter::{barycenter, map_h, BarycenterConfig};
use crate::error::{Error, Result};
use crate::geodesic::transport_map;
use crate::random::{fill_standard_normal, stream_rng};
use crate::spd::{check_same_dim, relative_frobenius, SpdMatrix, RECON_TOL};
use crate::weights::Weights;

/// Samples per Monte Carlo chunk. Each chunk draws from its own substream.
pub const MC_CHUNK: usize = 1 << 14;

/// Relative tolerance of the per-sample identity `Σ w_j x_j = R₁⁻¹ x₁`.
pub const SAMPLE_IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CouplingPlan {
    pub omega: SpdMatrix,
    pub marginals: Vec<SpdMatrix>,
    /// `R_j = Ω⁻¹ # A_j`.
    pub r_maps: Vec<SpdMatrix>,
    /// `R_j R₁⁻¹` for `j ≥ 2`.
    pub pair_maps: Vec<DMatrix<f64>>,
    /// `tr Ω`.
    pub optimal_value: f64,
    pub iterations: usize,
}

impl CouplingPlan {
    /// `‖Σ w_j R_j − I‖_F / ‖I‖_F`.
    pub fn identity_defect(&self, w: &Weights) -> Result<f64> {
        w.ensure_len(self.r_maps.len())?;
        let n = self.omega.dim();
        let mut sum = DMatrix::zeros(n, n);
        for (r, &wj) in self.r_maps.iter().zip(w.values()) {
            sum += r.matrix() * wj;
        }
        Ok(relative_frobenius(&sum, &DMatrix::identity(n, n)))
    }

    /// Largest `‖R_j Ω R_j − A_j‖_F / ‖A_j‖_F`.
    pub fn pushforward_defect(&self) -> f64 {
        self.r_maps
            .iter()
            .zip(&self.marginals)
            .map(|(r, a)| relative_frobenius(&r.congruence(self.omega.matrix()), a.matrix()))
            .fold(0.0, f64::max)
    }
}

pub fn build_coupling(
    mats: &[SpdMatrix],
    w: &Weights,
    cfg: &BarycenterConfig,
) -> Result<CouplingPlan> {
    let solution = barycenter(mats, w, cfg)?;
    let omega = solution.omega;
    let r_maps = mats
        .iter()
        .map(|a| map_h(&omega, a))
        .collect::<Result<Vec<_>>>()?;
    let r1_inv = r_maps[0].inverse()?;
    let pair_maps = r_maps[1..]
        .iter()
        .map(|r| r.matrix() * r1_inv.matrix())
        .collect();
    let plan = CouplingPlan {
        optimal_value: omega.trace(),
        omega,
        marginals: mats.to_vec(),
        r_maps,
        pair_maps,
        iterations: solution.iterations,
    };
    let defect = plan.identity_defect(w)?;
    if defect > RECON_TOL {
        return Err(Error::Inconsistent {
            what: "Σ w_j R_j differs from the identity",
            defect,
        });
    }
    let defect = plan.pushforward_defect();
    if defect > RECON_TOL {
        return Err(Error::Inconsistent {
            what: "R_j Ω R_j differs from A_j",
            defect,
        });
    }
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean − expected| ≤ k · std_error`.
    pub fn within(&self, expected: f64, k: f64) -> bool {
        (self.mean - expected).abs() <= k * self.std_error
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

fn chunk_sizes(samples: u64) -> Vec<usize> {
    let chunk = MC_CHUNK as u64;
    (0..samples.div_ceil(chunk))
        .map(|c| (samples - c * chunk).min(chunk) as usize)
        .collect()
}

/// Estimates `E f(z)` over standard normal `z ∈ ℝⁿ`. `f` also returns a
/// per-sample defect whose maximum is reported alongside.
fn estimate<F>(dim: usize, samples: u64, seed: u64, f: F) -> Result<(McEstimate, f64)>
where
    F: Fn(&DVector<f64>) -> (f64, f64) + Sync,
{
    if samples == 0 {
        return Err(Error::ParamOutOfRange {
            name: "samples",
            value: 0.0,
            range: "[1, ∞)",
        });
    }
    let partials: Vec<(Moments, f64)> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(chunk, size)| {
            let mut rng = stream_rng(seed, chunk as u64);
            let mut z = DVector::zeros(dim);
            let mut moments = Moments::default();
            let mut worst = 0.0_f64;
            for _ in 0..size {
                fill_standard_normal(&mut rng, &mut z);
                let (value, defect) = f(&z);
                moments.push(value);
                worst = worst.max(defect);
            }
            (moments, worst)
        })
        .collect();
    // merge in chunk order so the result does not depend on scheduling
    let (moments, worst) = partials
        .into_iter()
        .fold((Moments::default(), 0.0_f64), |(m, w), (pm, pw)| (m.merge(pm), w.max(pw)));
    let variance = if moments.count > 1.0 {
        moments.m2 / (moments.count - 1.0)
    } else {
        0.0
    };
    Ok((
        McEstimate {
            mean: moments.mean,
            std_error: (variance / moments.count).sqrt(),
            samples,
            seed,
        },
        worst,
    ))
}

/// Monte Carlo estimate of `E‖x − Tx‖²` for `x ~ N(0, A)` and the optimal
/// map `T` toward `B`; converges to `d²(A, B)`.
pub fn mc_pair_cost(a: &SpdMatrix, b: &SpdMatrix, samples: u64, seed: u64) -> Result<McEstimate> {
    let t = transport_map(a, b)?;
    let n = a.dim();
    let l = (DMatrix::identity(n, n) - t.matrix.matrix()) * a.sqrt().matrix();
    Ok(estimate(n, samples, seed, |z| ((&l * z).norm_squared(), 0.0))?.0)
}

/// Monte Carlo estimate of `E‖x − y‖²` for the coupling `y = B^{1/2} Q A^{-1/2} x`
/// with an arbitrary orthogonal `Q`; never below `d²(A, B)` in expectation.
pub fn mc_orbit_cost(
    a: &SpdMatrix,
    b: &SpdMatrix,
    q: &DMatrix<f64>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    a.require_pd()?;
    b.require_pd()?;
    check_same_dim(a.dim(), b.dim())?;
    check_same_dim(a.dim(), q.nrows())?;
    let l = a.sqrt().matrix() - b.sqrt().matrix() * q;
    Ok(estimate(a.dim(), samples, seed, |z| ((&l * z).norm_squared(), 0.0))?.0)
}

/// Monte Carlo estimate of `E‖Σ w_j x_j‖²` under the plan's coupling;
/// converges to `tr Ω`. Each sample is checked against `Σ w_j x_j = R₁⁻¹ x₁`.
pub fn mc_coupling_value(
    plan: &CouplingPlan,
    w: &Weights,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    w.ensure_len(plan.r_maps.len())?;
    let n = plan.omega.dim();
    let root = plan.marginals[0].sqrt().matrix().clone();
    let r1_inv = plan.r_maps[0].inverse()?.matrix().clone();
    let weights = w.values();
    // x₁ ↦ Σ w_j x_j as one matrix, plus the per-map route for the identity check
    let (est, worst) = estimate(n, samples, seed, |z| {
        let x1 = &root * z;
        let mut mixed = &x1 * weights[0];
        for (pair, &wj) in plan.pair_maps.iter().zip(&weights[1..]) {
            mixed += pair * &x1 * wj;
        }
        let direct = &r1_inv * &x1;
        let scale = direct.norm().max(x1.norm()).max(f64::MIN_POSITIVE);
        ((mixed.norm_squared()), (mixed - direct).norm() / scale)
    })?;
    if worst > SAMPLE_IDENTITY_TOL {
        return Err(Error::Inconsistent {
            what: "Σ w_j x_j differs from R₁⁻¹ x₁",
            defect: worst,
        });
    }
    Ok(est)
}

/// Entrywise empirical covariance of `y = T x` with its standard errors.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub mean: DMatrix<f64>,
    pub std_error: DMatrix<f64>,
    pub samples: u64,
    pub seed: u64,
}

impl CovarianceEstimate {
    /// Largest `|Ĉ_ij − C_ij| / se_ij` over all entries.
    pub fn max_z_score(&self, expected: &DMatrix<f64>) -> f64 {
        self.mean
            .iter()
            .zip(self.std_error.iter())
            .zip(expected.iter())
            .map(|((m, s), e)| (m - e).abs() / s.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Samples `x ~ N(0, A)`, pushes through `T = A⁻¹ # B`, and estimates the
/// covariance of `Tx` (which should be `B`).
pub fn mc_pushforward_covariance(
    a: &SpdMatrix,
    b: &SpdMatrix,
    samples: u64,
    seed: u64,
) -> Result<CovarianceEstimate> {
    if samples < 2 {
        return Err(Error::ParamOutOfRange {
            name: "samples",
            value: samples as f64,
            range: "[2, ∞)",
        });
    }
    let t = transport_map(a, b)?;
    let n = a.dim();
    let l = t.matrix.matrix() * a.sqrt().matrix();
    let partials: Vec<(DMatrix<f64>, DMatrix<f64>)> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(chunk, size)| {
            let mut rng = stream_rng(seed, chunk as u64);
            let mut z = DVector::zeros(n);
            let mut sum = DMatrix::zeros(n, n);
            let mut sum_sq = DMatrix::zeros(n, n);
            for _ in 0..size {
                fill_standard_normal(&mut rng, &mut z);
                let y = &l * &z;
                let outer = &y * y.transpose();
                sum_sq += outer.component_mul(&outer);
                sum += outer;
            }
            (sum, sum_sq)
        })
        .collect();
    let mut sum = DMatrix::zeros(n, n);
    let mut sum_sq = DMatrix::zeros(n, n);
    for (s, s2) in partials {
        sum += s;
        sum_sq += s2;
    }
    let count = samples as f64;
    let mean = sum / count;
    let second = sum_sq / count;
    let std_error = DMatrix::from_fn(n, n, |i, j| {
        let var = (second[(i, j)] - mean[(i, j)].powi(2)).max(0.0) * count / (count - 1.0);
        (var / count).sqrt()
    });
    Ok(CovarianceEstimate {
        mean,
        std_error,
        samples,
        seed,
    })
}
