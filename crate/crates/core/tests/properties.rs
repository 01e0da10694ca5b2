use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twistlab::complex_core::{l2_bettis, morse_partial_sums, random_complex};
use twistlab::geometry::{build_torus_complex, real_cocycle, FlatTorusGrid, OneCocycle};
use twistlab::morse::{find_zeros, strong_morse_check, ModelOperator, MorseOneForm, TrigTerm};
use twistlab::twisted::{exact_flat_density, grid_duality_check, theta_function, MultiplierModel, TwistedLaplacian};
use twistlab::vn_core::{HilbertianModule, VNAlgebra};

fn scalar() -> HilbertianModule {
    HilbertianModule::free(&VNAlgebra::scalars(), 1)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn closed_twists_square_to_zero(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let g = FlatTorusGrid::square(8);
        let cx = g.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<f64> = (0..cx.num_vertices).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let theta = g.constant_twist(&[a, b]).unwrap().add(&OneCocycle::exact(&cx, &h));
        prop_assert!(theta.closedness_defect(&cx) < 1e-12);
        let d = cx.coboundaries(&real_cocycle(&theta.values)).unwrap();
        prop_assert!(d[1].mul(&d[0]).max_abs() < 1e-9 * (1.0 + d[0].max_abs().powi(2)));
    }

    #[test]
    fn twisted_laplacians_are_positive_and_dual(a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let g = FlatTorusGrid::square(8);
        let theta = g.constant_twist(&[a, b]).unwrap();
        let tc = build_torus_complex(&g, &theta, &scalar()).unwrap();
        for j in 0..=2 {
            let l = TwistedLaplacian::assemble(&tc, j, 1.0).unwrap();
            prop_assert!(l.psd_violation().unwrap() < 1e-9);
        }
        prop_assert!(grid_duality_check(&g.build().unwrap(), &theta).unwrap().passed);
    }

    #[test]
    fn multiplier_bottom_is_the_squared_norm(t in proptest::collection::vec(-5.0f64..5.0, 1..=3), s in 0.1f64..3.0) {
        let n = t.len();
        let norm2: f64 = t.iter().map(|x| x * x).sum();
        for j in 0..=n {
            let m = MultiplierModel::new(n, t.clone(), j, s).unwrap();
            prop_assert!((m.lambda0().unwrap() - s * s * norm2).abs() <= 1e-9 * (1.0 + s * s * norm2));
        }
    }

    #[test]
    fn theta_function_decreases(t1 in 0.01f64..5.0, dt in 0.01f64..5.0, n in 1usize..=3) {
        let d = exact_flat_density(n, &vec![0.0; n], 0, 1.0).unwrap();
        prop_assert!(theta_function(&d, t1 + dt).unwrap() <= theta_function(&d, t1).unwrap());
    }

    #[test]
    fn model_kernel_follows_the_index(h in proptest::collection::vec(prop_oneof![-9.0f64..-0.1, 0.1f64..9.0], 1..=3), dim_e in 0.25f64..3.0) {
        let n = h.len();
        let index = h.iter().filter(|&&a| a < 0.0).count();
        let m = ModelOperator::new(n, vec![h], dim_e).unwrap();
        for j in 0..=n {
            let k = m.kernel_trace(j).unwrap();
            prop_assert_eq!(k, if j == index { dim_e } else { 0.0 });
        }
    }

    #[test]
    fn perturbed_forms_keep_euler_count(c1 in -0.3f64..0.3, c2 in -0.3f64..0.3, p in -0.5f64..0.5) {
        let mut form = MorseOneForm::cos_cos();
        form.periods = vec![p, 0.0];
        form.primitive.terms.push(TrigTerm { k: vec![1, 1], cos_coeff: c1, sin_coeff: c2 });
        if let Ok(d) = find_zeros(&form, 32) {
            prop_assert_eq!(d.alternating_sum(), 0);
            let r = strong_morse_check(&[0.0, 0.0, 0.0], &d.morse_numbers, 1.0).unwrap();
            prop_assert!(r.passed);
        }
    }

    #[test]
    fn random_complexes_satisfy_partial_sums(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = VNAlgebra::random(&mut rng, 3, 2);
        let c = random_complex(&mut rng, &alg, 4, 3).unwrap();
        prop_assert!(morse_partial_sums(&c).unwrap().iter().all(|p| p.holds));
        prop_assert!(l2_bettis(&c).unwrap().iter().zip(c.dims()).all(|(b, d)| *b <= d + 1e-10 && *b >= -1e-10));
    }
}
