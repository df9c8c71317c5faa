use gausscouple::datum::{scalar_sum_datum, ConstraintFunction, Datum};
use gausscouple::frbl::{compute_dg, evaluate_f};
use gausscouple::inequalities::{
    dep_epi_bound, gaussian_coupled_sum_power, verify_functional_gaussian, EntropyPower, FunctionalGaussian,
};
use gausscouple::pd::{delta2, geometric_mean, PdMatrix};
use gausscouple::sample::{gaussian_matrix, random_pd};
use gausscouple::SolverOptions;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pd_pair(seed: u64, n: usize) -> (PdMatrix, PdMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_pd(&mut rng, n, 30.0), random_pd(&mut rng, n, 30.0))
}

fn rel(a: &PdMatrix, b: &PdMatrix) -> f64 {
    a.as_sym().sub(b.as_sym()).frobenius_norm() / a.as_sym().frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geometric_mean_swaps_endpoints(seed in any::<u64>(), n in 1usize..6, t in 0.0f64..1.0) {
        let (a, b) = pd_pair(seed, n);
        prop_assert!(rel(&geometric_mean(&a, &b, t), &geometric_mean(&b, &a, 1.0 - t)) < 1e-9);
    }

    #[test]
    fn midpoint_halves_the_distance(seed in any::<u64>(), n in 1usize..6) {
        let (a, b) = pd_pair(seed, n);
        let m = geometric_mean(&a, &b, 0.5);
        let d = delta2(&a, &b);
        prop_assert!((delta2(&a, &m) - 0.5 * d).abs() < 1e-8 * (1.0 + d));
        prop_assert!((delta2(&m, &b) - 0.5 * d).abs() < 1e-8 * (1.0 + d));
    }

    #[test]
    fn mean_commutes_with_congruence(seed in any::<u64>(), n in 1usize..5) {
        let (a, b) = pd_pair(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let c = gaussian_matrix(&mut rng, n, n) + nalgebra::DMatrix::identity(n, n) * 3.0;
        let lhs = geometric_mean(&a.congruence(&c).unwrap(), &b.congruence(&c).unwrap(), 0.5);
        let rhs = geometric_mean(&a, &b, 0.5).congruence(&c).unwrap();
        prop_assert!(rel(&lhs, &rhs) < 1e-8);
    }

    #[test]
    fn dep_epi_grows_with_budget(p1 in 0.1f64..50.0, p2 in 0.1f64..50.0, n in 1usize..4, z in 0.0f64..5.0, dz in 0.0f64..5.0) {
        let n1 = EntropyPower::from_power(n, p1).unwrap();
        let n2 = EntropyPower::from_power(n, p2).unwrap();
        let lo = dep_epi_bound(&n1, &n2, z).unwrap();
        let hi = dep_epi_bound(&n1, &n2, z + dz).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-14));
        prop_assert!(lo >= p1 + p2 - 1e-12);
        prop_assert!(hi <= (p1.sqrt() + p2.sqrt()).powi(2) * (1.0 + 1e-14));
    }

    #[test]
    fn gaussian_coupled_sum_meets_bound(seed in any::<u64>(), n in 1usize..4, z in 0.0f64..4.0) {
        let (k1, k2) = pd_pair(seed, n);
        let power = gaussian_coupled_sum_power(&k1, &k2, z).unwrap();
        let bound = dep_epi_bound(&EntropyPower::of_gaussian(&k1), &EntropyPower::of_gaussian(&k2), z).unwrap();
        prop_assert!(power >= bound * (1.0 - 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_is_convex_in_exponents(a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let opts = SolverOptions::default();
        let dg = |l: f64| {
            let datum = scalar_sum_datum([l, 1.0 - l]);
            compute_dg(&datum, datum.c(), &ConstraintFunction::unconstrained(), &opts).unwrap().value
        };
        let mid = dg(0.5 * (a + b));
        prop_assert!(mid <= 0.5 * (dg(a) + dg(b)) + 1e-7);
    }

    #[test]
    fn objective_is_geodesically_convex(seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = vec![1, 2];
        let maps = vec![gaussian_matrix(&mut rng, 2, 3), gaussian_matrix(&mut rng, 1, 3)];
        let datum = Datum::from_parts(dims.clone(), vec![1.0, 1.0], vec![1.0, 0.5], maps).unwrap();
        let c = [0.8, 0.6];
        let start: Vec<PdMatrix> = dims.iter().map(|&n| random_pd(&mut rng, n, 20.0)).collect();
        let end: Vec<PdMatrix> = dims.iter().map(|&n| random_pd(&mut rng, n, 20.0)).collect();
        let along: Vec<PdMatrix> = start.iter().zip(&end).map(|(a, b)| geometric_mean(a, b, t)).collect();
        let f0 = evaluate_f(&datum, &c, &start).unwrap();
        let f1 = evaluate_f(&datum, &c, &end).unwrap();
        let ft = evaluate_f(&datum, &c, &along).unwrap();
        prop_assert!(ft <= (1.0 - t) * f0 + t * f1 + 1e-7);
    }

    #[test]
    fn majorized_gaussians_satisfy_the_functional_form(
        lambda in 0.1f64..0.9,
        a1 in 0.1f64..10.0,
        a2 in 0.1f64..10.0,
        shrink in 0.05f64..1.0,
        s1 in -3.0f64..3.0,
        s2 in -3.0f64..3.0,
    ) {
        let datum = scalar_sum_datum([lambda, 1.0 - lambda]);
        let dg = compute_dg(&datum, datum.c(), &ConstraintFunction::unconstrained(), &SolverOptions::default())
            .unwrap()
            .value;
        let (w1, w2) = (lambda * a1, (1.0 - lambda) * a2);
        // largest G with diag(w1, w2) - G [1 1; 1 1] still PSD
        let g = shrink * w1 * w2 / (w1 + w2);
        let f = [
            FunctionalGaussian::new(PdMatrix::from_row_slice(1, &[a1]).unwrap(), s1),
            FunctionalGaussian::new(PdMatrix::from_row_slice(1, &[a2]).unwrap(), s2),
        ];
        let gs = [FunctionalGaussian::new(PdMatrix::from_row_slice(1, &[g]).unwrap(), lambda * s1 + (1.0 - lambda) * s2)];
        let r = verify_functional_gaussian(&datum, dg, &f, &gs).unwrap();
        prop_assert!(r.majorization_holds);
        prop_assert!(r.inequality_holds, "lhs {} rhs {}", r.lhs, r.rhs);
    }
}
