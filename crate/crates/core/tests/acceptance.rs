//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use solvferm_core::families::{
    hahn_type2_kappa_series, hahn_type2_kappas, limit_check_h_to_m, limit_check_k_to_c,
    limit_check_m_to_c,
};
use solvferm_core::fermion::jordan_wigner as jw;
use solvferm_core::markov::{FINITE_TOL, TRUNCATED_TOL};
use solvferm_core::spectral::{numeric_spectrum, spectrum_mismatch};
use solvferm_core::*;

/// Tail bound used when truncated lattices enter the spectral criteria; it
/// leaves a few dozen modes with negligible weight outside the window.
const SPECTRAL_TAIL: f64 = 1e-100;

struct Outcome {
    label: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(label: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome {
        label,
        passed,
        detail,
    }
}

fn grid() -> Vec<RecipeSpec> {
    SweepConfig::from_json(include_str!("data/grid.json"))
        .and_then(|c| c.expand())
        .expect("grid config")
}

fn stochasticity_and_balance() -> Vec<Outcome> {
    let start = Instant::now();
    let specs = grid();
    let combos: BTreeSet<(String, String)> = specs
        .iter()
        .map(|s| {
            (
                s.recipe.family().to_string(),
                s.recipe.conv_type().to_string(),
            )
        })
        .collect();
    let mut worst_finite: f64 = 0.0;
    let mut worst_trunc: f64 = 0.0;
    let mut worst_balance: f64 = 0.0;
    let mut failures = Vec::new();
    for spec in &specs {
        let kernel = spec
            .lattice_spec()
            .and_then(|l| ConvolutionKernel::build(&spec.recipe, l))
            .expect("grid recipe builds");
        let tol = kernel.lattice().default_tol();
        let rep = verify_kernel(&kernel, tol);
        if kernel.lattice().is_truncated() {
            worst_trunc = worst_trunc.max(rep.max_stochastic_violation);
        } else {
            worst_finite = worst_finite.max(rep.max_stochastic_violation);
        }
        worst_balance = worst_balance.max(rep.max_reversibility_violation);
        if !(rep.max_stochastic_violation <= tol
            && rep.max_reversibility_violation <= FINITE_TOL
            && rep.positivity)
        {
            failures.push(spec.to_string());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();

    // the stationary law of Krawtchouk type (iii) with a and b swapped in the
    // denominator must not balance the kernel
    let mut rejected = 0;
    let mut tried = 0;
    for spec in specs.iter().filter(|s| {
        s.recipe.family() == Family::Krawtchouk && s.recipe.conv_type() == ConvType::III
    }) {
        let RecipeParams::Krawtchouk { a, b } = spec.recipe.params() else {
            unreachable!()
        };
        let kernel = ConvolutionKernel::build(&spec.recipe, spec.lattice_spec().unwrap()).unwrap();
        let n = kernel.lattice().finite_n().unwrap();
        let swapped = FamilyParams::Krawtchouk {
            p: a * b / (1.0 - a + a * b),
        };
        let pi = nalgebra::DVector::from_fn(n + 1, |x, _| swapped.weight(x, n));
        let (k, _) = kernel.clone().into_parts();
        let alt = ConvolutionKernel::from_parts(k, pi, spec.recipe, kernel.lattice()).unwrap();
        tried += 1;
        if verify_kernel(&alt, FINITE_TOL).max_reversibility_violation > FINITE_TOL {
            rejected += 1;
        }
    }

    vec![
        outcome(
            "1 stochasticity",
            failures.is_empty() && combos.len() == 13 && worst_finite <= FINITE_TOL
                && worst_trunc <= TRUNCATED_TOL && elapsed < 30.0,
            format!(
                "{} kernels, {} combinations, max |colsum-1| finite {worst_finite:.1e} truncated {worst_trunc:.1e}, {elapsed:.1} s",
                specs.len(),
                combos.len()
            ),
        ),
        outcome(
            "2 detailed balance",
            failures.is_empty() && worst_balance <= FINITE_TOL && tried > 0 && rejected == tried,
            format!(
                "max relative flux imbalance {worst_balance:.1e}; swapped Krawtchouk (iii) law rejected {rejected}/{tried}"
            ),
        ),
    ]
}

fn spectral_grid() -> Vec<RecipeSpec> {
    grid()
        .into_iter()
        .filter_map(|s| match s.lattice {
            Some(LatticeRequest::Size(n)) if n <= 50 => Some(s),
            Some(LatticeRequest::TailEps(_)) => {
                Some(s.with_lattice(LatticeRequest::TailEps(SPECTRAL_TAIL)))
            }
            _ => None,
        })
        .collect()
}

fn lattice_n(s: &SpectralSystem) -> f64 {
    s.kernel().lattice().finite_n().unwrap_or(s.size() - 1) as f64
}

fn spectral_criteria() -> Vec<Outcome> {
    let start = Instant::now();
    let mut worst_spec: f64 = 0.0;
    let mut worst_res_ratio: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    let mut worst_comp: f64 = 0.0;
    let mut worst_trunc_orth: f64 = 0.0;
    let mut fewest_modes = usize::MAX;
    let mut bad_spec = Vec::new();
    let mut sqrt_pi_rejected = 0;
    let mut finite_count = 0;
    let mut count = 0;
    for spec in spectral_grid() {
        let sys = SpectralSystem::analytic(&spec.recipe, spec.lattice_spec().unwrap())
            .expect("spectral system");
        count += 1;
        let numeric = sys.numeric_spectrum().unwrap();
        let mis = spectrum_mismatch(sys.kappas(), &numeric);
        worst_spec = worst_spec.max(mis);
        if mis > 1e-8 || sys.mode_count() < 3 {
            bad_spec.push(spec.to_string());
        }
        let bound = 1e-9 * sys.h_norm_inf() * (1.0 + lattice_n(&sys) / 50.0);
        let res = sys.residuals().into_iter().fold(0.0, f64::max);
        worst_res_ratio = worst_res_ratio.max(res / bound);
        if sys.is_complete() {
            finite_count += 1;
            worst_orth = worst_orth.max(sys.orthonormality_defect());
            worst_comp = worst_comp.max(sys.completeness_defect());
            // π in place of √π
            let mut wrong = sys.phi().clone();
            for (x, mut row) in wrong.row_iter_mut().enumerate() {
                row *= sys.sqrt_pi()[x];
            }
            let m = wrong.ncols();
            if (wrong.transpose() * &wrong - DMatrix::identity(m, m)).amax() > 1e-9 {
                sqrt_pi_rejected += 1;
            }
        } else {
            fewest_modes = fewest_modes.min(sys.mode_count());
            worst_trunc_orth = worst_trunc_orth
                .max(sys.orthonormality_defect())
                .max(sys.completeness_defect());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    vec![
        outcome(
            "3 spectrum",
            bad_spec.is_empty() && worst_spec <= 1e-8 && elapsed < 60.0,
            format!(
                "{count} systems, max |κ - eig| {worst_spec:.1e}, truncated lattices keep >= {fewest_modes} modes, {elapsed:.1} s"
            ),
        ),
        outcome(
            "4 eigenvector residuals",
            worst_res_ratio <= 1.0,
            format!("max residual / bound {worst_res_ratio:.1e}"),
        ),
        outcome(
            "5 orthonormality/completeness",
            worst_orth <= 1e-9
                && worst_comp <= 1e-9
                && worst_trunc_orth <= 1e-9
                && sqrt_pi_rejected == finite_count,
            format!(
                "finite: |ΦᵀΦ-I| {worst_orth:.1e} |ΦΦᵀ-I| {worst_comp:.1e}; truncated retained modes {worst_trunc_orth:.1e}; π-weighted modes rejected {sqrt_pi_rejected}/{finite_count}"
            ),
        ),
    ]
}

fn fermion_recipes(small: bool) -> Vec<RecipeSpec> {
    let (n, m) = if small { (3, 3) } else { (5, 5) };
    [
        format!("krawtchouk type=ii a=0.2 b=0.6 N={n}"),
        format!("charlier type=i a=0.5 b=1.0 M={m}"),
        format!("hahn type=i a=1.0 b=2.0 c=0.5 N={n}"),
        format!("meixner type=iii a=1.0 b=0.3 c=2.0 M={m}"),
        format!("qhahn type=iii a=0.4 b=-0.5 c=0.3 q=0.7 N={n}"),
    ]
    .iter()
    .map(|l| l.parse().unwrap())
    .collect()
}

fn many_body_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for spec in fermion_recipes(true)
        .into_iter()
        .chain(fermion_recipes(false))
    {
        let sys = SpectralSystem::analytic(&spec.recipe, spec.lattice_spec().unwrap()).unwrap();
        let model = FreeFermionModel::new(&sys, 0.0).unwrap();
        let sums = many_body_energies(&model, 12).unwrap();
        let oracle = jw::oracle_spectrum(sys.hamiltonian()).unwrap();
        let diff = sums
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(if sums.len() == oracle.len() {
            diff
        } else {
            f64::INFINITY
        });
        checked += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        "6 many-body spectrum",
        worst <= 1e-10 && checked == 10 && elapsed < 20.0,
        format!("{checked} models (sizes 4 and 6), max diff {worst:.1e}, {elapsed:.1} s"),
    )
}

fn entropy_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    let cases: [(&str, Option<usize>); 2] = [
        ("krawtchouk type=ii a=0.2 b=0.6 N=9", None),
        // fill the four lowest modes
        ("hahn type=i a=1.0 b=2.0 c=0.5 N=9", Some(4)),
    ];
    for (line, lowest) in cases {
        let spec: RecipeSpec = line.parse().unwrap();
        let sys = SpectralSystem::analytic(&spec.recipe, spec.lattice_spec().unwrap()).unwrap();
        let mu = match lowest {
            None => 0.0,
            Some(k) => {
                let mut e = sys.kappas().to_vec();
                e.sort_by(f64::total_cmp);
                0.5 * (e[k - 1] + e[k])
            }
        };
        let model = FreeFermionModel::new(&sys, mu).unwrap();
        let c = model.correlation_matrix();
        let (_, psi) = jw::ground_state(sys.hamiltonian(), mu).unwrap();
        let size = sys.size();
        let mut peak: f64 = 0.0;
        for a in 0..=size {
            for b in a..=size {
                let s = block_entropy(&c, a..b).unwrap();
                let r = jw::reduced_density_entropy(&psi, size, a..b).unwrap();
                worst = worst.max((s - r).abs());
                peak = peak.max(s);
            }
        }
        details.push(format!("{} filled, S_max {peak:.3}", model.filled().len()));
    }
    let negative = details[0].starts_with('0');
    outcome(
        "7 block entropy",
        worst <= 1e-8 && !negative,
        format!("max diff {worst:.1e}; {}", details.join("; ")),
    )
}

fn limits() -> Outcome {
    let ns = [10, 100, 1000];
    let mut reports = Vec::new();
    for p in [0.5, 2.0] {
        reports.push(("K→C", limit_check_k_to_c(p, &ns, 15).unwrap()));
    }
    for (a, b) in [(1.0, 0.3), (2.5, 0.6)] {
        reports.push(("H→M", limit_check_h_to_m(a, b, &ns, 15).unwrap()));
    }
    for b in [0.5, 2.0] {
        reports.push((
            "M→C",
            limit_check_m_to_c(b, &[10.0, 100.0, 1000.0], 15).unwrap(),
        ));
    }
    let passed = reports.iter().all(|(_, r)| r.strictly_decreasing());
    let detail = reports
        .iter()
        .map(|(name, r)| {
            let d: Vec<String> = r.distances.iter().map(|d| format!("{d:.1e}")).collect();
            format!("{name} [{}]", d.join(" "))
        })
        .collect::<Vec<_>>()
        .join(", ");
    outcome("8 limits", passed, detail)
}

fn krawtchouk_negative_modes() -> Outcome {
    // points where |a-b|^N stays above the sign threshold
    let points: [(f64, f64, &[usize]); 3] = [
        (0.2, 0.6, &[5, 6, 11, 20]),
        (0.05, 0.95, &[5, 20, 37, 50]),
        (0.3, 0.5, &[4, 9, 13]),
    ];
    let mut failures = Vec::new();
    let mut checked = 0;
    for (a, b, sizes) in points {
        let recipe = ConvolutionRecipe::krawtchouk(ConvType::II, a, b).unwrap();
        for &n in sizes {
            checked += 1;
            let sys = SpectralSystem::analytic(&recipe, LatticeSpec::finite(n)).unwrap();
            let odd_negative = (1..=n).step_by(2).all(|k| sys.kappas()[k] < 0.0);
            let numeric = numeric_spectrum(sys.hamiltonian()).unwrap();
            let negative = numeric.iter().filter(|&&e| e < -1e-10).count();
            if !odd_negative || negative != n.div_ceil(2) {
                failures.push(format!("a={a} b={b} N={n}: {negative} negative"));
            }
        }
    }
    outcome(
        "9 negative spectrum",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} lattices, odd κ < 0 and ⌈N/2⌉ negative eigenvalues")
        } else {
            failures.join("; ")
        },
    )
}

#[allow(clippy::needless_range_loop)]
fn hahn_dual_forms() -> Outcome {
    let grid = [(1.0, 2.0, 0.5), (0.5, 1.5, 2.0), (2.0, 0.7, 1.3)];
    let mut worst_series: f64 = 0.0;
    let mut worst_quad: f64 = 0.0;
    for (a, b, c) in grid {
        let quad = hahn_type2_kappas(a, b, c, 16);
        for n in 0..=15 {
            let exact = common::hahn_type2_alternating(a, b, c, n);
            let series = hahn_type2_kappa_series(a, b, c, n).unwrap();
            worst_series = worst_series.max(common::rel_error(series, &exact));
            worst_quad = worst_quad.max(common::rel_error(quad[n], &exact));
        }
    }
    outcome(
        "10 Hahn (ii) dual forms",
        worst_series <= 1e-12,
        format!(
            "3F2 vs alternating sum max rel {worst_series:.1e} (quadrature path {worst_quad:.1e})"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut all = stochasticity_and_balance();
    all.extend(spectral_criteria());
    all.push(many_body_oracle());
    all.push(entropy_oracle());
    all.push(limits());
    all.push(krawtchouk_negative_modes());
    all.push(hahn_dual_forms());
    println!();
    for o in &all {
        println!(
            "{} {:<32} {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.label,
            o.detail
        );
    }
    let failed = all.iter().filter(|o| !o.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        all.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
