use proptest::prelude::*;

use meanspec::census::{census, CensusConfig, Convention};
use meanspec::grid::{assemble_dirichlet, GridMask};
use meanspec::heat::{lemma4_tail, spectral_heat_mass, strip_coefficients_exact};
use meanspec::mc::{mc_survival, BallRegion, McConfig};
use meanspec::sparse::Cholesky;
use meanspec::special::{bessel_j, upper_gamma};
use meanspec::spectra::{disk_mean_carrying, enumerate_box};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn box_spectrum_sorted_and_partitioned(l1 in 0.5f64..3.0, l2 in 0.5f64..3.0, n in 1usize..400) {
        let s = enumerate_box(&[l1, l2], n).unwrap();
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.modes.windows(2).all(|w| w[0].lambda <= w[1].lambda));
        let mut next = 0;
        for r in &s.clusters {
            prop_assert_eq!(r.start, next);
            next = r.end;
        }
        prop_assert_eq!(next, n);
        let longer = enumerate_box(&[l1, l2], n + 50).unwrap();
        for (a, b) in s.modes.iter().zip(&longer.modes) {
            prop_assert_eq!(a.lambda, b.lambda);
        }
    }

    #[test]
    fn cluster_count_never_exceeds_canonical(l1 in 0.5f64..2.0, l2 in 0.5f64..2.0) {
        let s = enumerate_box(&[l1, l2], 500).unwrap();
        let a = census(&s, &CensusConfig::exact()).unwrap();
        let b = census(&s, &CensusConfig::exact().with_convention(Convention::Cluster)).unwrap();
        prop_assert!(b.counting.last() <= a.counting.last());
        prop_assert!(a.parseval_partial.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(*a.parseval_partial.last().unwrap() <= l1 * l2 * (1.0 + 1e-12));
    }

    #[test]
    fn bessel_three_term_recurrence(n in 1u32..40, x in 0.1f64..60.0) {
        let lhs = bessel_j(n - 1, x).unwrap() + bessel_j(n + 1, x).unwrap();
        let rhs = 2.0 * n as f64 / x * bessel_j(n, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn upper_gamma_decreasing(s in 0.1f64..5.0, x in 0.0f64..30.0, dx in 0.01f64..3.0) {
        prop_assert!(upper_gamma(s, x + dx).unwrap() <= upper_gamma(s, x).unwrap());
    }

    #[test]
    fn tail_decreases_with_cutoff(eps in 0.005f64..0.1, c in 0.5f64..3.0) {
        let a = lemma4_tail(4.0 * std::f64::consts::PI, 2, eps, c).unwrap();
        let b = lemma4_tail(4.0 * std::f64::consts::PI, 2, eps, c * 1.5).unwrap();
        prop_assert!(b.sum < a.sum);
    }

    #[test]
    fn random_mask_factorisation_solves(bits in proptest::collection::vec(any::<bool>(), 144)) {
        let mut inside = bits.clone();
        inside[5 * 12 + 5] = true;
        let mask = GridMask::from_raster(12, 12, 0.1, [0.0, 0.0], inside).unwrap();
        let op = assemble_dirichlet(&mask);
        let chol = Cholesky::factor(&op).unwrap();
        let x: Vec<f64> = (0..op.dimension).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; op.dimension];
        op.matvec(&x, &mut b);
        chol.solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn heat_mass_bounded_by_initial_mass(eps in 0.02f64..0.3, t in 0.0005f64..0.5) {
        let spec = disk_mean_carrying(1.0, 300).unwrap();
        let strip = strip_coefficients_exact(&spec, eps).unwrap();
        for c in &strip.coefficients {
            prop_assert!(c.abs() <= strip.strip_measure.sqrt());
        }
        let m = spectral_heat_mass(&strip, &spec, t).unwrap();
        prop_assert!(m.value > 0.0);
        prop_assert!(m.value <= strip.strip_measure + m.truncation_bound);
    }

    #[test]
    fn bridge_survival_coupled(seed in any::<u64>(), r in 0.5f64..0.95) {
        let region = BallRegion { radius: 1.0, dim: 2 };
        let times = [0.004, 0.008];
        let cfg = |bridge| McConfig { n_paths: 1000, dt: Some(2e-4), seed, bridge_correction: bridge };
        let a = mc_survival(&region, &[r, 0.0], &times, &cfg(true)).unwrap();
        let b = mc_survival(&region, &[r, 0.0], &times, &cfg(false)).unwrap();
        for (x, y) in a.survivors.iter().zip(&b.survivors) {
            prop_assert!(x <= y);
        }
        prop_assert!(a.survivors[1] <= a.survivors[0]);
    }
}
