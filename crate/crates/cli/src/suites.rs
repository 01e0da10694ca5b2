use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use twistlab::complex_core::{euler_identity, morse_partial_sums, random_complex};
use twistlab::geometry::{build_surface, build_torus_complex, FlatTorusGrid, HomologyBasis, LocalSystem, TwistedComplex};
use twistlab::morse::{
    asymptotic_morse_check, find_zeros, gap_report, strong_morse_check, witten_sweep, DegreeSpectralData,
    GapConclusion, MorseOneForm, SweepOptions,
};
use twistlab::twisted::{
    cover_tower, exact_flat_density, lambda0, ns_fit, MultiplierModel, NsWindow, TwistedLaplacian,
};
use twistlab::vn_core::{HilbertianModule, VNAlgebra};

use crate::report::{csv_row, num, Check, Outcome};
use crate::run::{surface_twist, torus_bettis, RunError, RunResult};

/// Generic harmonic class on the genus-2 surface.
const GENERIC_CLASS: [f64; 4] = [0.37, -0.21, 0.53, 0.11];
const SUITE_SEED: u64 = 2024;

fn scalar() -> HilbertianModule {
    HilbertianModule::free(&VNAlgebra::scalars(), 1)
}

fn grid_bottom(resolution: Vec<usize>, theta: &[f64], s: f64) -> RunResult<f64> {
    let g = FlatTorusGrid::new(resolution);
    let tc = build_torus_complex(&g, &g.constant_twist(theta)?, &scalar())?;
    let l = TwistedLaplacian::assemble(&tc, 0, s)?;
    lambda0(&l, false)?.ok_or_else(|| RunError("empty spectrum".into()))
}

fn circle() -> RunResult<Vec<Check>> {
    let mut checks = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let exact = MultiplierModel::new(1, vec![1.0], 0, s)?.lambda0()?;
        checks.push(Check::near(format!("circle λ₀ at s = {s} (Fourier model)"), exact, s * s, 1e-12, "reference value"));
        let grid = grid_bottom(vec![512], &[1.0], s)?;
        checks.push(Check::near(format!("circle λ₀ at s = {s} (512-cell grid)"), grid, s * s, 0.01 * s * s, "reference value"));
    }
    Ok(checks)
}

fn torus() -> RunResult<Vec<Check>> {
    let d = exact_flat_density(2, &[0.0, 0.0], 0, 1.0)?;
    let fit = ns_fit(&d, 0.0, NsWindow::exact_default())?;
    let mut checks = vec![
        Check::near("torus NS slope, untwisted", fit.slope.unwrap_or(f64::NAN), 1.0, 0.02, "reference value"),
        Check::holds("torus untwisted density has no gap", !fit.gap_flag, "reference value"),
    ];
    let twisted = ns_fit(&exact_flat_density(2, &[3.0, 4.0], 0, 1.0)?, 0.0, NsWindow::exact_default())?;
    checks.push(Check::holds("torus θ = (3,4) density is gapped", twisted.gap_flag, "reference value"));
    let exact = MultiplierModel::new(2, vec![3.0, 4.0], 0, 1.0)?.lambda0()?;
    checks.push(Check::near("torus λ₀ at θ = (3,4) (Fourier model)", exact, 25.0, 1e-12, "reference value"));
    let grid = grid_bottom(vec![64, 64], &[3.0, 4.0], 1.0)?;
    checks.push(Check::near("torus λ₀ at θ = (3,4) (64² grid)", grid, 25.0, 0.02 * 25.0, "reference value"));
    Ok(checks)
}

fn genus2() -> RunResult<Vec<Check>> {
    let s = build_surface(2, 8)?;
    let basis = HomologyBasis::tree_cotree(&s.complex)?;
    let z: Vec<i64> = basis.cocycles[1].values.iter().map(|v| v.round() as i64).collect();
    let rows = cover_tower(&s, &z, &[1, 2, 3, 4], &GENERIC_CLASS)?;
    let mut checks: Vec<Check> = rows
        .iter()
        .map(|r| Check::near(format!("genus 2 b̄¹ on the {}-sheeted cover", r.sheets), r.normalized[1], 2.0, 1e-12, "reference value"))
        .collect();
    let last = &rows.last().expect("nonempty").normalized;
    checks.push(Check::near("genus 2 b̄⁰ + b̄²", last[0] + last[2], 0.0, 1e-12, "reference value"));

    let (_, theta) = surface_twist(2, 8, &GENERIC_CLASS)?;
    let tc = TwistedComplex::new(s.complex.clone(), LocalSystem::real(scalar(), theta))?;
    let spectral = (0..=2)
        .map(|j| {
            Ok(DegreeSpectralData {
                betti: last[j],
                lambda0_excluded: lambda0(&TwistedLaplacian::assemble(&tc, j, 1.0)?, true)?,
                torsion_present: false,
            })
        })
        .collect::<RunResult<Vec<_>>>()?;
    let data = find_zeros(&MorseOneForm::bundled("genus2-generic")?, 32)?;
    let report = gap_report(&spectral, &data, 1.0)?;
    let bound = match report[1].conclusion {
        GapConclusion::AtLeast(k) => k as f64,
        GapConclusion::NoConclusion => 0.0,
    };
    checks.push(Check::at_least("genus 2 lower bound on m₁", bound, 2.0, "reference value"));
    checks.push(Check::holds("bundled genus-2 form respects the bound", report[1].satisfied, "reference value"));
    Ok(checks)
}

fn inequalities(threads: usize) -> RunResult<Vec<Check>> {
    let form = MorseOneForm::cos_cos();
    let opts = SweepOptions { threads, ..SweepOptions::geometric(2.0, 12) };
    let sweep = witten_sweep(&FlatTorusGrid::square(32), &form, &scalar(), &opts)?;
    let data = find_zeros(&form, 32)?;
    let strong = strong_morse_check(&torus_bettis(&form)?, &data.morse_numbers, 1.0)?;
    let samples = opts
        .s_values
        .iter()
        .map(|&s| Ok((s, torus_bettis(&form.scaled(s))?)))
        .collect::<RunResult<Vec<_>>>()?;
    let asym = asymptotic_morse_check(&samples, &data, 1.0)?;
    let mut checks = vec![
        Check::holds("Witten counts stabilize on the 32² grid", sweep.stabilized, "structural"),
        Check::holds(
            format!("stable counts {:?} match the model {:?}", sweep.tail_counts, sweep.expected),
            sweep.matches_model,
            "oracle",
        ),
        Check::holds("strong Morse inequalities for cos-cos", strong.passed, "oracle"),
        Check::holds("asymptotic Morse inequalities along the sweep", asym.passed, "oracle"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut failures = 0usize;
    for _ in 0..20 {
        let alg = VNAlgebra::random(&mut rng, 3, 2);
        let c = random_complex(&mut rng, &alg, 4, 3)?;
        let ok = euler_identity(&c)?.holds && morse_partial_sums(&c)?.iter().all(|p| p.holds);
        failures += !ok as usize;
    }
    checks.push(Check::near("random complexes violating the partial sums (of 20)", failures as f64, 0.0, 0.0, "structural"));
    Ok(checks)
}

pub fn run_suite(name: &str, threads: usize) -> RunResult<Outcome> {
    let checks = match name {
        "circle" => circle()?,
        "torus" => torus()?,
        "genus2" => genus2()?,
        "inequalities" => inequalities(threads)?,
        other => return Err(RunError(format!("unknown suite '{other}'"))),
    };
    let mut csv = String::from("check,measured,expected,tolerance,passed,source\n");
    for c in &checks {
        csv.push_str(&csv_row(&[
            format!("\"{}\"", c.name.replace('"', "\"\"")),
            num(c.measured),
            num(c.expected),
            num(c.tolerance),
            c.passed.to_string(),
            c.source.to_string(),
        ]));
    }
    Ok(Outcome { csv, checks, result: json!({ "suite": name }) })
}
