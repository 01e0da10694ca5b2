use super::*;
use crate::geometry::{build_surface, build_torus_complex, FlatTorusGrid, HomologyBasis, LocalSystem};
use crate::vn_core::{HilbertianModule, VNAlgebra};
use std::f64::consts::PI;

fn scalar() -> HilbertianModule {
    HilbertianModule::free(&VNAlgebra::scalars(), 1)
}

fn torus_complex(n: usize, cov: &[f64]) -> TwistedComplex {
    let g = if cov.len() == 1 { FlatTorusGrid::circle(n) } else { FlatTorusGrid::square(n) };
    build_torus_complex(&g, &g.constant_twist(cov).unwrap(), &scalar()).unwrap()
}

fn genus_two(coords: &[f64]) -> TwistedComplex {
    let s = build_surface(2, 8).unwrap();
    let basis = HomologyBasis::tree_cotree(&s.complex).unwrap();
    let theta = harmonic_twist(&s.complex, &basis, coords).unwrap();
    TwistedComplex::new(s.complex, LocalSystem::real(scalar(), theta)).unwrap()
}

use crate::geometry::harmonic_twist;

#[test]
fn fourier_circle_bottom_is_s_squared() {
    for s in [0.5, 1.0, 2.0] {
        let m = MultiplierModel::new(1, vec![1.0], 0, s).unwrap();
        assert!((m.lambda0().unwrap() - s * s).abs() <= 1e-12);
    }
    let m = MultiplierModel::new(2, vec![3.0, 4.0], 1, 1.0).unwrap();
    assert!((m.lambda0().unwrap() - 25.0).abs() <= 1e-12);
}

#[test]
fn exact_density_closed_forms() {
    let n1 = exact_flat_density(1, &[0.0], 0, 1.0).unwrap();
    assert!((n1.eval(PI * PI) - 1.0).abs() < 1e-14);
    assert!((n1.eval(2.0) - 2f64.sqrt() / PI).abs() < 1e-14);
    let gapped = exact_flat_density(1, &[1.0], 0, 1.0).unwrap();
    assert_eq!(gapped.eval(0.999), 0.0);
    assert!(gapped.eval(1.5) > 0.0);
    let n2 = exact_flat_density(2, &[0.0, 0.0], 0, 1.0).unwrap();
    assert!((n2.eval(3.0) - 3.0 / (4.0 * PI)).abs() < 1e-14);
    assert!(exact_flat_density(4, &[0.0; 4], 0, 1.0).is_err());
}

#[test]
fn theta_function_values() {
    let n1 = exact_flat_density(1, &[0.0], 0, 1.0).unwrap();
    assert!((theta_function(&n1, 1.0).unwrap() - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-12);
    let jump = SpectralDensity::from_weighted(vec![(2.0, 0.7)]);
    assert!((theta_function(&jump, 0.5).unwrap() - 0.7 * (-1.0f64).exp()).abs() < 1e-15);
    let with_kernel = SpectralDensity::from_weighted(vec![(0.0, 1.0), (2.0, 0.7)]);
    assert!((theta_function(&with_kernel, 0.5).unwrap() - 0.7 * (-1.0f64).exp()).abs() < 1e-15);
    assert!(theta_function(&jump, 0.0).is_err());
    // gapped bound Θ(t) ≤ dim · e^{−tλ_g}
    let gapped = SpectralDensity::from_weighted(vec![(3.0, 0.5), (5.0, 0.5)]);
    assert!(theta_function(&gapped, 2.0).unwrap() <= (-6.0f64).exp() + 1e-15);
}

#[test]
fn ns_exponents_of_closed_forms() {
    let w = NsWindow::exact_default();
    for n in 1..=3 {
        let d = exact_flat_density(n, &vec![0.0; n], 0, 1.0).unwrap();
        let fit = ns_fit(&d, 0.0, w).unwrap();
        let expected = n as f64 / 2.0;
        assert!((fit.slope.unwrap() - expected).abs() < 1e-9);
        assert!(fit.discrepancy.unwrap() < 0.1);
    }
    let synthetic = SpectralDensity::power_law(1.0 / PI, 0.5, 0.0);
    let fit = ns_fit(&synthetic, 0.0, NsWindow { lambda_min: 1e-3, lambda_max: 1.0 }).unwrap();
    assert!((fit.alpha.unwrap() - 0.5).abs() < 0.02 && (fit.alpha_bar.unwrap() - 0.5).abs() < 0.02);
    for norm in [0.5, 1.0] {
        let d = exact_flat_density(2, &[norm, 0.0], 0, 1.0).unwrap();
        let fit = ns_fit(&d, 0.0, w).unwrap();
        assert!(fit.gap_flag);
        assert!((fit.gap.unwrap() - norm * norm).abs() < 1e-12);
    }
    assert!(ns_fit(&synthetic, 0.0, NsWindow { lambda_min: 1.0, lambda_max: 0.5 }).is_err());
}

#[test]
fn anticommutator_expansion_is_exact() {
    let xis = vec![vec![0.0, 0.0], vec![0.3, -1.2], vec![2.0, 0.7]];
    let r = anticommutator_check(2, &[0.4, -1.1], &[1.5, 0.2], &xis).unwrap();
    assert!(r.max_defect().unwrap() < 1e-10, "{r:?}");
    let r = anticommutator_check(3, &[0.0; 3], &[1.0, 2.0, 3.0], &[vec![0.1, 0.2, 0.3]]).unwrap();
    assert!(r.max_defect().unwrap() < 1e-12);
}

#[test]
fn circle_grid_bottom_approaches_s_squared() {
    let tc = torus_complex(128, &[1.0]);
    for s in [0.5, 2.0] {
        let l = TwistedLaplacian::assemble(&tc, 0, s).unwrap();
        let l0 = lambda0(&l, false).unwrap().unwrap();
        assert!((l0 - s * s).abs() / (s * s) < 0.01, "{s}: {l0}");
    }
    let flat = TwistedLaplacian::assemble(&tc, 0, 0.0).unwrap();
    assert!(lambda0(&flat, false).unwrap().unwrap().abs() < 1e-10);
    assert!(flat.psd_violation().unwrap() < PSD_TOL);
    assert!(flat.symmetry_defect() < 1e-12);
}

#[test]
fn torus_grid_bottom_is_norm_squared() {
    let tc = torus_complex(32, &[3.0, 4.0]);
    for j in 0..=2 {
        let l = TwistedLaplacian::assemble(&tc, j, 1.0).unwrap();
        let l0 = lambda0(&l, true).unwrap().unwrap();
        assert!((l0 - 25.0).abs() / 25.0 < 0.02, "degree {j}: {l0}");
    }
}

#[test]
fn stencil_symbol_matches_assembled_spectrum() {
    let g = FlatTorusGrid::square(8);
    let cov = [0.8, -1.7];
    let tc = build_torus_complex(&g, &g.constant_twist(&cov).unwrap(), &scalar()).unwrap();
    let mut sym: Vec<f64> = Vec::new();
    for a in 0..8 {
        for b in 0..8 {
            let w = [2.0 * PI * a as f64 / 8.0, 2.0 * PI * b as f64 / 8.0];
            sym.push(symbol_eigenvalues(&g, &cov, &w));
        }
    }
    sym.sort_by(f64::total_cmp);
    for j in 0..=2 {
        let spec = TwistedLaplacian::assemble(&tc, j, 1.0).unwrap().spectrum().unwrap();
        let mut expect: Vec<f64> = sym.iter().flat_map(|&l| std::iter::repeat_n(l, crate::linalg::binomial(2, j))).collect();
        expect.sort_by(f64::total_cmp);
        let got: Vec<f64> = spec.eigenvalues.iter().map(|e| e.0).collect();
        let worst = got.iter().zip(&expect).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-9, "degree {j}: {worst}");
    }
}

#[test]
fn bloch_average_approaches_the_closed_form() {
    let g = FlatTorusGrid::circle(64);
    let bloch = bloch_density(&g, &[0.0], 0, 64).unwrap();
    let symbol = symbol_density(&g, &[0.0], 0, 4096).unwrap();
    let exact = exact_flat_density(1, &[0.0], 0, 1.0).unwrap();
    // lowest quarter by count: N ≤ 16
    for lambda in [50.0, 200.0, 800.0, 2000.0] {
        let e = exact.eval(lambda);
        assert!(e <= 16.0);
        assert!((bloch.eval(lambda) - e).abs() / e < 0.03, "bloch at {lambda}");
        assert!((symbol.eval(lambda) - e).abs() / e < 0.03, "symbol at {lambda}");
    }
}

#[test]
fn gauge_invariance_on_circle_and_surface() {
    let tc = torus_complex(16, &[0.7]);
    let h: Vec<f64> = (0..16).map(|i| 0.3 * (2.0 * PI * i as f64 / 16.0).sin()).collect();
    let r = gauge_check(&tc, &h).unwrap();
    assert!(r.passed, "{r:?}");
    let zero = gauge_check(&tc, &[0.0; 16]).unwrap();
    assert!(zero.conjugation_defect == 0.0 && zero.dilation_constants.iter().all(|c| *c == Some(1.0)));

    let tc = genus_two(&[0.3, -0.2, 0.5, 0.1]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    use rand::{Rng, SeedableRng};
    let h: Vec<f64> = (0..tc.cells.num_vertices).map(|_| rng.random_range(-0.5..0.5)).collect();
    let r = gauge_check(&tc, &h).unwrap();
    assert!(r.passed, "{r:?}");
    assert!((r.kernel_before[1] - 2.0).abs() < 1e-8);
}

#[test]
fn poincare_duality_on_surface_and_torus() {
    let tc = genus_two(&[0.3, -0.2, 0.5, 0.1]);
    let r = poincare_check(&tc.cells, &tc.system.twist).unwrap();
    assert!(r.passed, "{r:?}");
    let g = FlatTorusGrid::square(12);
    let cx = g.build().unwrap();
    let theta = g.constant_twist(&[0.9, -2.3]).unwrap();
    assert!(grid_duality_check(&cx, &theta).unwrap().passed);
    assert!(poincare_check(&cx, &theta).unwrap().passed);
    let c = FlatTorusGrid::circle(16);
    assert!(poincare_check(&c.build().unwrap(), &c.constant_twist(&[0.4]).unwrap()).unwrap().passed);
}

#[test]
fn metric_rescaling_preserves_dilatation_class() {
    let tc = genus_two(&[0.3, -0.2, 0.5, 0.1]);
    for c in [0.5, 1.3, 2.0] {
        let r = rescaling_check(&tc, c).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn fiber_weights_scale_densities() {
    let g = FlatTorusGrid::circle(8);
    let theta = g.constant_twist(&[0.0]).unwrap();
    let alg = VNAlgebra::matrix(2);
    let p = faer::Mat::from_fn(2, 2, |i, j| crate::linalg::C64::new(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0));
    let half = HilbertianModule::with_projection(&alg, 1, vec![p]).unwrap();
    let tc = build_torus_complex(&g, &theta, &half).unwrap();
    let spec = TwistedLaplacian::assemble(&tc, 0, 1.0).unwrap().spectrum().unwrap();
    assert!((spec.kernel_trace() - 0.5).abs() < 1e-12);
    let zero = SpectralDensity::from_weighted(vec![(0.0, 1.5)]);
    assert_eq!(zero.eval(0.0), 1.5);
}

#[test]
fn tower_gives_minus_euler_characteristic() {
    let s = build_surface(2, 8).unwrap();
    let basis = HomologyBasis::tree_cotree(&s.complex).unwrap();
    let z: Vec<i64> = basis.cocycles[1].values.iter().map(|v| v.round() as i64).collect();
    let rows = cover_tower(&s, &z, &[1, 2, 3], &[0.3, -0.2, 0.5, 0.1]).unwrap();
    for r in &rows {
        assert_eq!(r.normalized, vec![0.0, 2.0, 0.0]);
    }
    let flat = cover_tower(&s, &z, &[2, 4], &[0.0; 4]).unwrap();
    for r in &flat {
        let k = r.sheets as f64;
        assert!((r.normalized[1] - (2.0 + 2.0 / k)).abs() < 1e-12);
    }
}

#[test]
fn scan_finds_the_jump_at_zero() {
    let s = build_surface(2, 8).unwrap();
    let basis = HomologyBasis::tree_cotree(&s.complex).unwrap();
    let dir = harmonic_twist(&s.complex, &basis, &[0.3, -0.2, 0.5, 0.1]).unwrap();
    let ts: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.25).collect();
    let r = semicontinuity_scan(&ts, |t| {
        Ok(twisted_bettis_by_rank(&s.complex, &dir.scaled(t))?[1] as f64)
    })
    .unwrap();
    assert_eq!(r.upward_jumps, vec![0.0]);
    assert!(r.semicontinuous);
}

#[test]
fn multiplier_betti_numbers_vanish() {
    let classes: Vec<Vec<f64>> =
        (0..9).map(|i| vec![(i % 3) as f64 - 1.0, (i / 3) as f64 - 1.0]).collect();
    for row in multiplier_vanishing(2, &classes).unwrap() {
        assert!(row.bettis.iter().all(|&b| b == 0.0));
    }
}

#[test]
fn deformation_family_starts_at_base_twist() {
    let tc = torus_complex(8, &[0.5, 0.0]);
    let g = FlatTorusGrid::square(8);
    let alpha = g.constant_twist(&[0.0, 1.0]).unwrap();
    let at0 = TwistedLaplacian::family(&tc, &alpha, 1, 0.0).unwrap().spectrum().unwrap();
    let base = TwistedLaplacian::assemble(&tc, 1, 1.0).unwrap().spectrum().unwrap();
    for (a, b) in at0.eigenvalues.iter().zip(&base.eigenvalues) {
        assert!((a.0 - b.0).abs() < 1e-12);
    }
    let moved = TwistedLaplacian::family(&tc, &alpha, 0, 2.0).unwrap();
    let l0 = lambda0(&moved, false).unwrap().unwrap();
    assert!((l0 - 4.25).abs() / 4.25 < 0.02);
    assert!(TwistedLaplacian::assemble(&tc, 3, 1.0).is_err());
}
