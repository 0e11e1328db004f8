use bures_wasserstein::barycenter::{arithmetic_mean, k_trace_gap, variance};
use bures_wasserstein::random::{random_ensemble, random_orthogonal, random_psd, random_spd, stream_rng};
use bures_wasserstein::spd::relative_frobenius;
use bures_wasserstein::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn pd(seed: u64, n: usize) -> SpdMatrix {
    random_spd(&mut stream_rng(seed, 0), n)
}

fn d(a: &SpdMatrix, b: &SpdMatrix) -> f64 {
    bures_distance(a, b).unwrap().d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_symmetric_and_triangular(s in any::<u64>(), n in 1usize..7, rank in 1usize..7) {
        let mut rng = stream_rng(s, 1);
        let a = random_spd(&mut rng, n);
        let b = random_psd(&mut rng, n, rank.min(n));
        let c = random_spd(&mut rng, n);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-10);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        prop_assert_eq!(d(&b, &b), 0.0);
    }

    #[test]
    fn distance_is_orthogonally_invariant(s in any::<u64>(), n in 1usize..7) {
        let mut rng = stream_rng(s, 2);
        let a = random_spd(&mut rng, n);
        let b = random_spd(&mut rng, n);
        let u = random_orthogonal(&mut rng, n);
        let rot = |m: &SpdMatrix| SpdMatrix::new(&u * m.matrix() * u.transpose()).unwrap();
        prop_assert!((d(&rot(&a), &rot(&b)) - d(&a, &b)).abs() <= 1e-9 * (1.0 + d(&a, &b)));
    }

    #[test]
    fn distance_scales_with_square_root(s in any::<u64>(), n in 1usize..6, c in 0.01f64..100.0) {
        let (a, b) = (pd(s, n), pd(s ^ 0x5555, n));
        let scale = |m: &SpdMatrix| SpdMatrix::new(m.matrix() * c).unwrap();
        prop_assert!((d(&scale(&a), &scale(&b)) - c.sqrt() * d(&a, &b)).abs() <= 1e-9 * c.sqrt().max(1.0) * (1.0 + d(&a, &b)));
    }

    #[test]
    fn fidelity_bounded_by_traces(s in any::<u64>(), n in 1usize..7) {
        let (a, b) = (pd(s, n), pd(s.wrapping_add(1), n));
        let f = fidelity(&a, &b).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!(f <= 0.5 * (a.trace() + b.trace()) + 1e-12);
        prop_assert!(f * f <= a.trace() * b.trace() * (1.0 + 1e-12));
    }

    #[test]
    fn geometric_mean_solves_riccati(s in any::<u64>(), n in 1usize..6) {
        let (a, b) = (pd(s, n), pd(!s, n));
        let g = geometric_mean(&a, &b).unwrap();
        let lhs = g.matrix() * a.inverse().unwrap().matrix() * g.matrix();
        prop_assert!(relative_frobenius(&lhs, b.matrix()) <= 1e-9);
        let swapped = geometric_mean(&b, &a).unwrap();
        prop_assert!(relative_frobenius(swapped.matrix(), g.matrix()) <= 1e-9);
    }

    #[test]
    fn transport_map_pushes_forward(s in any::<u64>(), n in 1usize..7) {
        let (a, b) = (pd(s, n), pd(s.rotate_left(7), n));
        let t = transport_map(&a, &b).unwrap();
        prop_assert!(t.pushforward_residual() <= RECON_TOL);
        let back = transport_map(&b, &a).unwrap();
        let id = t.matrix.matrix() * back.matrix.matrix();
        prop_assert!((id - DMatrix::identity(n, n)).norm() <= 1e-8);
    }

    #[test]
    fn geodesic_has_constant_speed(s in any::<u64>(), n in 1usize..6, t in 0.0f64..=1.0) {
        let (a, b) = (pd(s, n), pd(s ^ 0xabcdef, n));
        let path = geodesic(&a, &b).unwrap();
        let full = d(&a, &b);
        let g = path.evaluate(t).unwrap();
        prop_assert!((d(&a, &g) - t * full).abs() <= 1e-8 * full.max(1e-3));
        prop_assert!((d(&g, &b) - (1.0 - t) * full).abs() <= 1e-8 * full.max(1e-3));
    }

    #[test]
    fn barycenter_is_permutation_invariant(s in any::<u64>(), m in 2usize..5, n in 1usize..5) {
        let (mats, w) = random_ensemble(&mut stream_rng(s, 3), m, n);
        let omega = barycenter(&mats, &w, &BarycenterConfig::default()).unwrap().omega;
        let rev_mats: Vec<_> = mats.iter().rev().cloned().collect();
        let rev_w = Weights::new(w.values().iter().rev().copied().collect()).unwrap();
        let rev = barycenter(&rev_mats, &rev_w, &BarycenterConfig::default()).unwrap().omega;
        prop_assert!(relative_frobenius(rev.matrix(), omega.matrix()) <= 1e-10);
    }

    #[test]
    fn barycenter_minimizes_variance(s in any::<u64>(), m in 2usize..5, n in 1usize..5) {
        let mut rng = stream_rng(s, 4);
        let (mats, w) = random_ensemble(&mut rng, m, n);
        let omega = barycenter(&mats, &w, &BarycenterConfig::default()).unwrap().omega;
        let v = variance(&omega, &mats, &w).unwrap();
        let other = random_spd(&mut rng, n);
        prop_assert!(variance(&other, &mats, &w).unwrap() >= v - 1e-9);
        prop_assert!(variance(&arithmetic_mean(&mats, &w).unwrap(), &mats, &w).unwrap() >= v - 1e-9);
    }

    #[test]
    fn fixed_point_map_obeys_trace_inequality(s in any::<u64>(), m in 2usize..5, n in 1usize..5) {
        let mut rng = stream_rng(s, 5);
        let (mats, w) = random_ensemble(&mut rng, m, n);
        let a = random_spd(&mut rng, n);
        prop_assert!(k_trace_gap(&a, &mats, &w).unwrap() >= -1e-9);
        let k = map_k(&a, &mats, &w).unwrap();
        let drop = variance(&a, &mats, &w).unwrap() - variance(&k, &mats, &w).unwrap();
        prop_assert!(drop >= d(&a, &k).powi(2) - 1e-9);
    }

    #[test]
    fn monte_carlo_is_reproducible(s in any::<u64>(), n in 1usize..4) {
        let (a, b) = (pd(s, n), pd(s ^ 1, n));
        let x = mc_pair_cost(&a, &b, 5000, s).unwrap();
        let y = mc_pair_cost(&a, &b, 5000, s).unwrap();
        prop_assert_eq!(x.mean.to_bits(), y.mean.to_bits());
        prop_assert_eq!(x.std_error.to_bits(), y.std_error.to_bits());
    }
}
