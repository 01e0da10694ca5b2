use super::*;
use crate::geometry::{build_surface, FlatTorusGrid};
use crate::twisted::twisted_bettis_by_rank;
use crate::vn_core::{HilbertianModule, VNAlgebra};
use rand::SeedableRng;

fn scalar() -> HilbertianModule {
    HilbertianModule::free(&VNAlgebra::scalars(), 1)
}

#[test]
fn cos_cos_has_four_critical_points() {
    let d = find_zeros(&MorseOneForm::cos_cos(), 32).unwrap();
    assert_eq!(d.morse_numbers, vec![1, 2, 1]);
    let four_pi2 = 4.0 * std::f64::consts::PI.powi(2);
    for z in &d.zeros {
        assert!(z.location.iter().all(|&x| x.abs() < 1e-9 || (x - 0.5).abs() < 1e-9), "{z:?}");
        assert!(z.hessian.iter().all(|a| (a.abs() - four_pi2).abs() < 1e-9));
    }
    let maximum = d.zeros.iter().find(|z| z.index == 2).unwrap();
    assert!(maximum.location.iter().all(|&x| x.abs() < 1e-9));
}

#[test]
fn shifted_and_nowhere_zero_forms() {
    let shifted = find_zeros(&MorseOneForm::bundled("torus-cos-cos-shifted").unwrap(), 32).unwrap();
    assert_eq!(shifted.morse_numbers, vec![1, 2, 1]);
    assert!(shifted.zeros.iter().all(|z| z.location[0].abs() > 1e-3 && (z.location[0] - 0.5).abs() > 1e-3));
    let dx = find_zeros(&MorseOneForm::bundled("torus-dx").unwrap(), 32).unwrap();
    assert_eq!(dx.morse_numbers, vec![0, 0, 0]);
    let circle = find_zeros(&MorseOneForm::circle_cos(), 32).unwrap();
    assert_eq!(circle.morse_numbers, vec![1, 1]);
}

#[test]
fn degenerate_form_is_rejected() {
    let f = MorseOneForm::new(vec![0.0, 0.0], vec![TrigTerm { k: vec![1, 0], cos_coeff: 1.0, sin_coeff: 0.0 }]).unwrap();
    assert!(matches!(find_zeros(&f, 16), Err(Error::NotMorse(_))));
}

#[test]
fn pulled_back_forms_on_genus_two() {
    let generic = find_zeros(&MorseOneForm::bundled("genus2-generic").unwrap(), 32).unwrap();
    assert_eq!(generic.morse_numbers, vec![0, 2, 0]);
    assert!(generic.zeros.iter().all(|z| z.branch_point));
    let exact = find_zeros(&MorseOneForm::bundled("genus2-exact").unwrap(), 32).unwrap();
    assert_eq!(exact.morse_numbers, vec![2, 6, 2]);
    assert_eq!(exact.alternating_sum(), -2);
    // a zero sitting on a branch point
    let b = crate::geometry::branch_locations(2, 16).unwrap()[0];
    let through = MorseOneForm::new(
        vec![0.0, 0.0],
        vec![
            TrigTerm { k: vec![1, 0], cos_coeff: (std::f64::consts::TAU * b[0]).cos(), sin_coeff: (std::f64::consts::TAU * b[0]).sin() },
            TrigTerm { k: vec![0, 1], cos_coeff: (std::f64::consts::TAU * b[1]).cos(), sin_coeff: (std::f64::consts::TAU * b[1]).sin() },
        ],
    )
    .unwrap()
    .with_cover(2, 16)
    .unwrap();
    assert!(matches!(find_zeros(&through, 32), Err(Error::NotMorse(_))));
}

#[test]
fn bundled_forms_satisfy_the_euler_relation() {
    for name in MorseOneForm::bundled_names() {
        let form = MorseOneForm::bundled(name).unwrap();
        let d = find_zeros(&form, 32).unwrap();
        assert_eq!(d.alternating_sum(), form.euler_characteristic(), "{name}");
        assert!(form.closedness_defect(50) <= 1e-12);
    }
}

#[test]
fn descriptor_round_trip_and_cocycle() {
    let form = MorseOneForm::bundled("genus2-generic").unwrap();
    let back = MorseOneForm::from_json(&form.to_json().unwrap()).unwrap();
    assert_eq!(form, back);
    assert!(MorseOneForm::from_json(r#"{"periods":[1.0],"primitive":{"terms":[{"k":[1,0],"cos":1.0,"sin":0.0}]}}"#).is_err());

    let s = build_surface(2, 16).unwrap();
    let z = form.cocycle_on(&s.complex).unwrap();
    assert!(z.closedness_defect(&s.complex) < 1e-12);
    let g = FlatTorusGrid::square(16);
    let cx = g.build().unwrap();
    let shifted = MorseOneForm::bundled("torus-cos-cos-shifted").unwrap();
    let z = shifted.cocycle_on(&cx).unwrap();
    let loops = g.axis_loops();
    assert!((z.period(&loops[0]) - 0.1).abs() < 1e-12 && z.period(&loops[1]).abs() < 1e-12);
}

#[test]
fn normal_forms_have_the_requested_index() {
    for n in 1..=3 {
        for k in 0..=n {
            let f = normal_form_sample(k, n).unwrap();
            assert_eq!(f.index(), k);
            assert_eq!(f.eval(&vec![0.0; n]), vec![0.0; n]);
        }
    }
    assert_eq!(normal_form_sample(0, 1).unwrap().hessian, vec![1.0]);
    assert_eq!(normal_form_sample(1, 2).unwrap().hessian, vec![-1.0, 1.0]);
    assert!(normal_form_sample(3, 2).is_err());
}

#[test]
fn model_spectrum_matches_box_oracle_in_the_plane() {
    for k in 0..=2 {
        let h = normal_form_sample(k, 2).unwrap().hessian;
        let m = ModelOperator::new(2, vec![h.clone()], 1.0).unwrap();
        for j in 0..=2 {
            let exact = m.lowest_values(j, 20).unwrap();
            let oracle = oscillator_oracle(&[h.clone()], j, 20).unwrap();
            let worst = exact.iter().zip(&oracle).fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
            assert!(worst < 1e-6, "k={k} j={j}: {worst}");
        }
    }
    let generic = vec![-3.7, 0.8];
    let m = ModelOperator::new(2, vec![generic.clone()], 1.0).unwrap();
    let exact = m.lowest_values(1, 20).unwrap();
    let oracle = oscillator_oracle(&[generic], 1, 20).unwrap();
    assert!(exact.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-6));
}

#[test]
fn kernel_sits_in_the_index_degree() {
    let saddle = normal_form_sample(1, 2).unwrap().zero();
    for dim_e in [1.0, 2.0, 0.5] {
        let m = ModelOperator::from_zeros(2, &[saddle.clone()], dim_e).unwrap();
        assert_eq!(m.kernel_trace(0).unwrap(), 0.0);
        assert_eq!(m.kernel_trace(1).unwrap(), dim_e);
        assert_eq!(m.kernel_trace(2).unwrap(), 0.0);
    }
    let m = ModelOperator::from_zeros(2, &[saddle], 1.0).unwrap();
    assert!((m.model_spectrum(0, 1).unwrap()[0].value - 2.0).abs() < 1e-12);
    assert_eq!(m.smallest_nonzero(), Some(2.0));
    assert!(ModelOperator::new(2, vec![vec![0.0, 1.0]], 1.0).is_err());
}

#[test]
fn strong_inequality_examples() {
    let r = strong_morse_check(&[0.0, 0.0, 0.0], &[1, 2, 1], 1.0).unwrap();
    assert!(r.passed);
    let lhs: Vec<f64> = r.rows.iter().map(|r| r.rhs).collect();
    assert_eq!(lhs, vec![1.0, 1.0, 0.0]);
    assert!(strong_morse_check(&[0.0, 2.0, 0.0], &[1, 4, 1], 1.0).unwrap().passed);
    let r = strong_morse_check(&[0.0, 2.0, 0.0], &[0, 1, 0], 1.0).unwrap();
    assert!(!r.passed);
    // a fiber of trace dimension 2 halves the left side
    let r = strong_morse_check(&[0.0, 4.0, 0.0], &[0, 2, 0], 2.0).unwrap();
    assert!(r.passed && (r.rows[1].lhs - 2.0).abs() < 1e-15);
}

#[test]
fn left_side_is_independent_of_the_exact_part() {
    let s = build_surface(2, 8).unwrap();
    let base = MorseOneForm::bundled("genus2-generic").unwrap().with_cover(2, 8).unwrap();
    let exact = MorseOneForm::cos_cos().with_cover(2, 8).unwrap();
    let theta = base.cocycle_on(&s.complex).unwrap();
    let df = exact.cocycle_on(&s.complex).unwrap();
    let m = find_zeros(&base, 32).unwrap();
    let mut lhs = Vec::new();
    for t in [0.0, 0.5, 3.0] {
        let b: Vec<f64> = twisted_bettis_by_rank(&s.complex, &theta.add(&df.scaled(t)))
            .unwrap()
            .iter()
            .map(|&b| b as f64)
            .collect();
        let r = strong_morse_check(&b, &m.morse_numbers, 1.0).unwrap();
        assert!(r.passed);
        lhs.push(r.rows.iter().map(|r| r.lhs).collect::<Vec<_>>());
    }
    assert!(lhs.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| (a - b).abs() <= 1e-8)));
}

#[test]
fn asymptotic_and_euler_checks() {
    let data = find_zeros(&MorseOneForm::bundled("torus-dx").unwrap(), 16).unwrap();
    let samples: Vec<(f64, Vec<f64>)> = [0.5, 1.0, 2.0].iter().map(|&s| (s, vec![0.0; 3])).collect();
    let r = asymptotic_morse_check(&samples, &data, 1.0).unwrap();
    assert!(r.passed && r.onset == Some(0.5));
    let cc = find_zeros(&MorseOneForm::cos_cos(), 32).unwrap();
    assert!(euler_morse_check(&[0.0; 3], &cc, 0, 1.0).unwrap().passed);
    let g2 = find_zeros(&MorseOneForm::bundled("genus2-generic").unwrap(), 32).unwrap();
    assert!(euler_morse_check(&[0.0, 2.0, 0.0], &g2, -2, 1.0).unwrap().passed);
    assert!(!euler_morse_check(&[0.0, 1.0, 0.0], &g2, -2, 1.0).unwrap().passed);
    let circle = find_zeros(&MorseOneForm::circle_cos(), 32).unwrap();
    assert!(euler_morse_check(&[0.0, 0.0], &circle, 0, 1.0).unwrap().passed);
}

#[test]
fn gap_report_semantics() {
    let cc = find_zeros(&MorseOneForm::cos_cos(), 32).unwrap();
    // flat torus, no twist: continuous spectrum down to zero in every degree
    let open = DegreeSpectralData { betti: 0.0, lambda0_excluded: Some(0.0), torsion_present: true };
    let rows = gap_report(&vec![open; 3], &cc, 1.0).unwrap();
    assert!(rows.iter().all(|r| r.conclusion == GapConclusion::AtLeast(1) && r.satisfied));
    let gapped = DegreeSpectralData { betti: 0.0, lambda0_excluded: Some(25.0), torsion_present: false };
    let rows = gap_report(&vec![gapped; 3], &cc, 1.0).unwrap();
    assert!(rows.iter().all(|r| r.conclusion == GapConclusion::NoConclusion));
    let g2 = find_zeros(&MorseOneForm::bundled("genus2-generic").unwrap(), 32).unwrap();
    let data = [
        DegreeSpectralData { betti: 0.0, lambda0_excluded: Some(0.3), torsion_present: false },
        DegreeSpectralData { betti: 2.0, lambda0_excluded: Some(0.3), torsion_present: false },
        DegreeSpectralData { betti: 0.0, lambda0_excluded: Some(0.3), torsion_present: false },
    ];
    let rows = gap_report(&data, &g2, 1.0).unwrap();
    assert_eq!(rows[1].conclusion, GapConclusion::AtLeast(2));
    assert!(rows[1].satisfied);
}

#[test]
fn circle_sweep_stabilizes() {
    let grid = FlatTorusGrid::circle(64);
    let opts = SweepOptions { threads: 2, ..SweepOptions::geometric(1.0, 12) };
    let r = witten_sweep(&grid, &MorseOneForm::circle_cos(), &scalar(), &opts).unwrap();
    assert!(r.stabilized && r.matches_model, "{:?}", r.tail_counts);
    assert_eq!(r.expected, vec![1.0, 1.0]);
    let dx = MorseOneForm::new(vec![1.0], vec![]).unwrap();
    let r = witten_sweep(&grid, &dx, &scalar(), &SweepOptions::geometric(2.0, 8)).unwrap();
    assert_eq!(r.tail_counts, vec![0.0, 0.0]);
    assert!(r.csv_like());
    let bad = SweepOptions { epsilon: Some(50.0), ..SweepOptions::geometric(1.0, 4) };
    assert!(witten_sweep(&grid, &MorseOneForm::circle_cos(), &scalar(), &bad).is_err());
}

impl SweepReport {
    fn csv_like(&self) -> bool {
        let csv = self.to_csv();
        csv.starts_with("s,j,count,gap_ratio\n") && csv.lines().count() == self.rows.len() + 1
    }
}

#[test]
fn perturbation_restores_nondegeneracy() {
    let degenerate = MorseOneForm::new(vec![0.0, 0.0], vec![TrigTerm { k: vec![1, 0], cos_coeff: 1.0, sin_coeff: 0.0 }]).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let (form, data) = perturb_to_morse(&degenerate, &mut rng, 0.05, 20).unwrap();
    assert_ne!(form, degenerate);
    assert_eq!(data.alternating_sum(), 0);
}
