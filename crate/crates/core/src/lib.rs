//! Bures-Wasserstein geometry on symmetric positive definite matrices.
//!
//! The distance `d(A, B) = [tr A + tr B − 2 tr(A^{1/2} B A^{1/2})^{1/2}]^{1/2}`
//! is the 2-Wasserstein distance between centred Gaussians with covariances
//! `A` and `B`. This crate provides that distance and the fidelity, the
//! geodesics and transport maps it induces, the weighted barycentre of an
//! ensemble via its fixed-point iteration, multi-marginal Gaussian couplings,
//! and a property suite for the inequalities that tie them together.
//!
//! ```
//! use bures_wasserstein::{bures_distance, wasserstein_mean, SpdMatrix};
//!
//! let a = SpdMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
//! let b = SpdMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
//! let d = bures_distance(&a, &b).unwrap().d;
//! let mid = wasserstein_mean(&a, &b).unwrap();
//! assert!(d > 0.0 && mid.is_pd());
//! ```

pub mod barycenter;
pub mod checks;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod geodesic;
pub mod metric;
pub mod random;
pub mod spd;
pub mod weights;

pub use barycenter::{
    barycenter, map_h, map_k, variance, BarycenterConfig, BarycenterSolution,
};
pub use coupling::{
    build_coupling, mc_coupling_value, mc_pair_cost, CouplingPlan, McEstimate,
};
pub use error::{Error, Result};
pub use geodesic::{
    curve_length, geodesic, riemannian_inner, transport_map, wasserstein_mean, GeodesicPath,
    TransportMap,
};
pub use metric::{
    affine_invariant_delta, bures_distance, fidelity, fidelity_variational_check, hellinger,
    CheckReport, DistanceReport,
};
pub use spd::{
    geometric_mean, loewner_leq, polar_unitary, power_mean_half, sqrt_psd, sylvester_solve,
    weighted_geometric, OrthogonalMatrix, SpdMatrix, SpectralDecomposition, SymMatrix,
    RECON_TOL,
};
pub use weights::Weights;
